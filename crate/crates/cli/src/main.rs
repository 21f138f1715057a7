use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use broac_core::bench::{run_scaling_benchmark, BenchReport};
use broac_core::generate::{
    random_small_world, SmallWorldLimits, WorldGenParams, GLOBAL_ABILITY_POOL, ITEM_ABILITY_POOL,
};
use broac_core::oracle::compare_all;
use broac_core::scenario::{execute, format_decision, parse_scenario, trace_line, Execution};
use broac_core::{Decision, World};

const EXIT_DENIED: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_UNAUTHORIZED: u8 = 3;

#[derive(Parser)]
#[command(name = "broac", version, about = "Run and query bivalent access control scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a scenario file and print every query result.
    Run { file: PathBuf },
    /// Run a scenario, then answer one query. Exits 1 when denied.
    Check(Query),
    /// Run a scenario, then show every permission behind one decision.
    Explain(Query),
    /// Run a scenario, then report every place where an agent is denied
    /// something the anonymous agent may do.
    Lint { file: PathBuf },
    /// Time filtered and unfiltered listings across site sizes.
    Bench {
        /// Users per site, ascending.
        #[arg(long, value_delimiter = ',', default_value = "10,20,30,40,50,60,70,80,90,100")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        reps: usize,
        /// Where to write the JSON report.
        #[arg(long, default_value = "bench-report.json")]
        report: PathBuf,
    },
    /// Compare the resolver against the reference oracle on random worlds.
    Fuzz {
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Args)]
struct Query {
    file: PathBuf,
    #[arg(long)]
    agent: String,
    #[arg(long)]
    item: String,
    #[arg(long)]
    ability: String,
}

/// A failure with its exit code.
struct Failure(u8, String);

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure(EXIT_INVALID, format!("{e:#}"))
    }
}

fn load(path: &Path) -> Result<Execution, Failure> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let directives =
        parse_scenario(&text).map_err(|e| Failure(EXIT_INVALID, format!("{}: parse error at {e}", path.display())))?;
    Ok(execute(&directives))
}

/// Fails with the halting error, if any, after printing partial output when
/// `print` is set.
fn finish(run: &Execution, path: &Path, print: bool) -> Result<(), Failure> {
    if print {
        print!("{}", run.render());
    }
    match &run.halted {
        None => Ok(()),
        Some(e) => {
            let code = if e.is_authorization() {
                EXIT_UNAUTHORIZED
            } else {
                EXIT_INVALID
            };
            Err(Failure(code, format!("{}: {e}", path.display())))
        }
    }
}

fn query(q: &Query, explain: bool) -> Result<(World, Decision), Failure> {
    let run = load(&q.file)?;
    finish(&run, &q.file, false)?;
    let world = run.world;
    let agent = world.lookup(&q.agent).map_err(anyhow::Error::from)?;
    let item = world.lookup(&q.item).map_err(anyhow::Error::from)?;
    let decision = if explain {
        world.explain(agent, item, &q.ability)
    } else {
        world.resolve_item_ability(agent, item, &q.ability)
    }
    .map_err(anyhow::Error::from)?;
    Ok((world, decision))
}

fn print_table(report: &BenchReport) {
    println!(
        "{:>6} {:>6} {:>8} {:>14} {:>14}",
        "users", "items", "visible", "filtered_ns", "unfiltered_ns"
    );
    for p in &report.points {
        println!(
            "{:>6} {:>6} {:>8} {:>14.0} {:>14.0}",
            p.users, p.item_count, p.visible_count, p.t_filtered_ns, p.t_unfiltered_ns
        );
    }
    for (name, fit) in [("filtered", report.filtered), ("unfiltered", report.unfiltered)] {
        println!(
            "{name:<10} slope {:>8.1} ns/item  intercept {:>10.0} ns  R^2 {:.4}",
            fit.slope, fit.intercept, fit.r_squared
        );
    }
    println!("slope ratio (filtered / unfiltered): {:.2}", report.slope_ratio());
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Run { file } => {
            let run = load(&file)?;
            finish(&run, &file, true)?;
            Ok(0)
        }
        Command::Check(q) => {
            let (_, decision) = query(&q, false)?;
            println!("{}", format_decision(&decision));
            Ok(if decision.allowed { 0 } else { EXIT_DENIED })
        }
        Command::Explain(q) => {
            let (world, decision) = query(&q, true)?;
            println!("{}", format_decision(&decision));
            let deciding: Vec<_> = decision.deciding().collect();
            for g in &decision.candidates {
                println!("{}", trace_line(&world, g, deciding.contains(&g)));
            }
            Ok(0)
        }
        Command::Lint { file } => {
            let run = load(&file)?;
            finish(&run, &file, false)?;
            let world = &run.world;
            let reports = world.lint_all().map_err(anyhow::Error::from)?;
            for r in &reports {
                println!(
                    "FLAGGED {} {} \"{}\": agent {} / anonymous {}",
                    world.name_of(r.agent),
                    world.name_of(r.item),
                    r.ability,
                    format_decision(&r.agent_decision),
                    format_decision(&r.anonymous_decision)
                );
            }
            println!("{} loophole(s) found", reports.len());
            Ok(0)
        }
        Command::Bench {
            sizes,
            seed,
            reps,
            report,
        } => {
            let params = WorldGenParams {
                seed,
                ..Default::default()
            };
            let result = run_scaling_benchmark(&sizes, &params, reps).map_err(anyhow::Error::from)?;
            print_table(&result);
            let mut json = serde_json::to_value(&result).map_err(anyhow::Error::from)?;
            json["slope_ratio"] = result.slope_ratio().into();
            let text = serde_json::to_string_pretty(&json).map_err(anyhow::Error::from)?;
            fs::write(&report, text + "\n").with_context(|| format!("cannot write {}", report.display()))?;
            println!("report written to {}", report.display());
            Ok(0)
        }
        Command::Fuzz { trials, seed } => {
            let mut checked = 0;
            let mut failing = 0;
            for t in 0..trials {
                let world_seed = seed.wrapping_add(t);
                let world = random_small_world(world_seed, SmallWorldLimits::default());
                let (n, divergences) = compare_all(&world, ITEM_ABILITY_POOL, GLOBAL_ABILITY_POOL);
                checked += n;
                if !divergences.is_empty() {
                    failing += 1;
                    for d in divergences.iter().take(3) {
                        println!(
                            "seed {world_seed}: {} {} \"{}\": resolver {} oracle {}",
                            d.agent,
                            d.item.as_deref().unwrap_or("(global)"),
                            d.ability,
                            d.resolver,
                            d.oracle
                        );
                    }
                }
            }
            println!("{trials} worlds, {checked} queries, {failing} world(s) with divergences");
            Ok(if failing == 0 { 0 } else { 1 })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, message)) => {
            eprintln!("broac: {message}");
            ExitCode::from(code)
        }
    }
}
