use std::fmt;

use thiserror::Error;

use crate::error::Error;
use crate::registry::TypeDef;
use crate::resolver::{Decision, LoopholeReport, Reason};
use crate::store::{GlobalPermission, Grant, ObjectSpec, Permission, SubjectSpec};
use crate::world::{Actor, EntityId, NewEntity, World};

use super::syntax::{Creation, Directive, DirectiveKind, ObjectRef, ParseError, SubjectRef};

/// A directive that failed while executing. Execution stops there.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {source}")]
pub struct ExecError {
    pub line: usize,
    #[source]
    pub source: Error,
}

impl ExecError {
    pub fn is_authorization(&self) -> bool {
        self.source.is_authorization()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScenarioError {
    #[error("parse error at {0}")]
    Parse(#[from] ParseError),
    #[error("{0}")]
    Exec(#[from] ExecError),
}

/// `ALLOWED|DENIED level=<n|-> reason=<...> [via=<Kind(sign)>,...]`.
pub fn format_decision(decision: &Decision) -> String {
    let verdict = if decision.allowed { "ALLOWED" } else { "DENIED" };
    let level = decision
        .winning_level
        .map_or_else(|| "-".to_string(), |l| l.to_string());
    let mut line = format!("{verdict} level={level} reason={}", decision.reason);
    if decision.reason == Reason::LevelComparison {
        let mut via: Vec<String> = decision
            .deciding()
            .map(|g| format!("{}({})", g.kind(), g.sign()))
            .collect();
        via.dedup();
        line.push_str(" via=");
        line.push_str(&via.join(","));
    }
    line
}

/// One query result, in directive order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Output {
    Check {
        directive: Directive,
        decision: Decision,
    },
    Filter {
        directive: Directive,
        items: Vec<String>,
    },
    /// `trace` holds one rendered line per relevant permission, in
    /// precedence order; deciding ones are starred.
    Explain {
        directive: Directive,
        decision: Decision,
        trace: Vec<String>,
    },
    Lint {
        directive: Directive,
        report: LoopholeReport,
    },
}

impl fmt::Display for Output {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Output::Check { directive, decision } => write!(f, "{directive}: {}", format_decision(decision)),
            Output::Filter { directive, items } if items.is_empty() => write!(f, "{directive}: (none)"),
            Output::Filter { directive, items } => write!(f, "{directive}: {}", items.join(" ")),
            Output::Explain {
                directive,
                decision,
                trace,
            } => {
                write!(f, "{directive}: {}", format_decision(decision))?;
                for line in trace {
                    write!(f, "\n{line}")?;
                }
                Ok(())
            }
            Output::Lint { directive, report } => {
                let status = if report.flagged { "FLAGGED" } else { "ok" };
                write!(
                    f,
                    "{directive}: {status}\n  agent: {}\n  anonymous: {}",
                    format_decision(&report.agent_decision),
                    format_decision(&report.anonymous_decision)
                )
            }
        }
    }
}

/// The result of running a scenario: the final world, every query output
/// produced, and the error that halted execution, if any.
#[derive(Debug, Clone)]
pub struct Execution {
    pub world: World,
    pub outputs: Vec<Output>,
    pub halted: Option<ExecError>,
}

impl Execution {
    /// All outputs, one per line (explain and lint outputs span several).
    pub fn render(&self) -> String {
        let mut s = String::new();
        for o in &self.outputs {
            s.push_str(&o.to_string());
            s.push('\n');
        }
        s
    }
}

/// Renders one trace line: `  * 2 OneToSome(allow) agent:a collection:c "x"`.
pub fn trace_line(world: &World, grant: &Grant, deciding: bool) -> String {
    let mark = if deciding { '*' } else { ' ' };
    let target = match grant {
        Grant::Item(p) => format!("{} {}", world.subject_label(&p.subject), world.object_label(&p.object)),
        Grant::Global(p) => format!("{} global", world.subject_label(&p.subject)),
    };
    format!(
        "  {mark} {} {}({}) {target} \"{}\"",
        grant.level(),
        grant.kind(),
        grant.sign(),
        grant.ability()
    )
}

fn trace(world: &World, decision: &Decision) -> Vec<String> {
    let deciding: Vec<&Grant> = decision.deciding().collect();
    decision
        .candidates
        .iter()
        .map(|g| trace_line(world, g, deciding.contains(&g)))
        .collect()
}

struct Executor {
    world: World,
    outputs: Vec<Output>,
}

impl Executor {
    fn id(&self, name: &str) -> Result<EntityId, Error> {
        self.world.lookup(name)
    }

    fn actor(&self, actor: &Option<String>) -> Result<Actor, Error> {
        match actor {
            Some(a) => Ok(Actor::Agent(self.id(a)?)),
            None => Ok(Actor::System),
        }
    }

    fn subject(&self, s: &SubjectRef) -> Result<SubjectSpec, Error> {
        Ok(match s {
            SubjectRef::Agent(a) => SubjectSpec::One(self.id(a)?),
            SubjectRef::Group(g) => SubjectSpec::Some(self.id(g)?),
            SubjectRef::All => SubjectSpec::All,
        })
    }

    fn object(&self, o: &ObjectRef) -> Result<ObjectSpec, Error> {
        Ok(match o {
            ObjectRef::Item(i) => ObjectSpec::One(self.id(i)?),
            ObjectRef::Collection(c) => ObjectSpec::Some(self.id(c)?),
            ObjectRef::All => ObjectSpec::All,
        })
    }

    fn create(&mut self, id: &str, default_type: &str, opts: &Creation) -> Result<(), Error> {
        let type_name = opts.type_name.as_deref().unwrap_or(default_type);
        let mut new = NewEntity::new(id, type_name);
        if let Some(c) = &opts.creator {
            new = new.creator(self.id(c)?);
        }
        if opts.nodefault {
            new = new.no_default_permission();
        }
        let actor = self.actor(&opts.actor)?;
        self.world.create_entity(new, actor)?;
        Ok(())
    }

    fn step(&mut self, d: &Directive) -> Result<(), Error> {
        match &d.kind {
            DirectiveKind::Type {
                name,
                extends,
                item_abilities,
                global_abilities,
            } => {
                let mut def = TypeDef::new(name.as_str())
                    .item_abilities(item_abilities.iter().map(String::as_str))
                    .global_abilities(global_abilities.iter().map(String::as_str));
                for p in extends {
                    def = def.extends(p.as_str());
                }
                self.world.define_type(def)?;
            }
            DirectiveKind::Agent { id, opts } => self.create(id, "Person", opts)?,
            DirectiveKind::Collection { id, opts } => self.create(id, "Collection", opts)?,
            DirectiveKind::Item { id, opts } => self.create(id, "Item", opts)?,
            DirectiveKind::Member {
                collection,
                member,
                enabled,
                actor,
            } => {
                let (c, m) = (self.id(collection)?, self.id(member)?);
                let actor = self.actor(actor)?;
                // On an existing edge an explicit flag is a permission_enabled
                // change; otherwise the edge is added.
                match (self.world.membership(c, m), enabled) {
                    (Some(_), Some(flag)) => {
                        self.world.set_permission_enabled(c, m, *flag, actor)?;
                    }
                    _ => {
                        self.world.add_membership(c, m, actor, *enabled)?;
                    }
                }
            }
            DirectiveKind::Permit {
                subject,
                object,
                ability,
                sign,
                actor,
            } => {
                let p = Permission::new(self.subject(subject)?, self.object(object)?, ability.as_str(), *sign);
                let actor = self.actor(actor)?;
                self.world.set_permission(p, actor)?;
            }
            DirectiveKind::PermitGlobal {
                subject,
                ability,
                sign,
                actor,
            } => {
                let p = GlobalPermission::new(self.subject(subject)?, ability.as_str(), *sign);
                let actor = self.actor(actor)?;
                self.world.set_global_permission(p, actor)?;
            }
            DirectiveKind::Check { agent, item, ability } => {
                let decision = self
                    .world
                    .resolve_item_ability(self.id(agent)?, self.id(item)?, ability)?;
                self.outputs.push(Output::Check {
                    directive: d.clone(),
                    decision,
                });
            }
            DirectiveKind::Filter { agent, ability } => {
                let items = self
                    .world
                    .filter_items(self.id(agent)?, ability)?
                    .into_iter()
                    .map(|id| self.world.name_of(id).to_string())
                    .collect();
                self.outputs.push(Output::Filter {
                    directive: d.clone(),
                    items,
                });
            }
            DirectiveKind::Explain { agent, item, ability } => {
                let decision = self.world.explain(self.id(agent)?, self.id(item)?, ability)?;
                let trace = trace(&self.world, &decision);
                self.outputs.push(Output::Explain {
                    directive: d.clone(),
                    decision,
                    trace,
                });
            }
            DirectiveKind::Lint { agent, item, ability } => {
                let report = self.world.lint_anonymous(self.id(agent)?, self.id(item)?, ability)?;
                self.outputs.push(Output::Lint {
                    directive: d.clone(),
                    report,
                });
            }
        }
        Ok(())
    }
}

/// Runs directives in order against a fresh world with anonymous access
/// enabled. Directives without an actor run as the system and skip the
/// metalevel guards.
pub fn execute(directives: &[Directive]) -> Execution {
    let mut world = World::new();
    world.enable_anonymous().expect("fresh world");
    let mut ex = Executor {
        world,
        outputs: Vec::new(),
    };
    let mut halted = None;
    for d in directives {
        if let Err(source) = ex.step(d) {
            halted = Some(ExecError { line: d.line, source });
            break;
        }
    }
    Execution {
        world: ex.world,
        outputs: ex.outputs,
        halted,
    }
}

/// Parses and executes `text`. Execution errors are returned as errors;
/// use [`execute`] to keep the partial output.
pub fn run_scenario(text: &str) -> Result<Execution, ScenarioError> {
    let directives = super::parse_scenario(text)?;
    let mut run = execute(&directives);
    match run.halted.take() {
        Some(e) => Err(e.into()),
        None => Ok(run),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
agent alice
agent bob
collection team
item doc type=TextDocument creator=alice
member team bob
"#;

    fn run(extra: &str) -> Result<Execution, ScenarioError> {
        run_scenario(&format!("{BASE}{extra}"))
    }

    #[test]
    fn definitions_only_produce_no_output() {
        assert!(run("").unwrap().outputs.is_empty());
    }

    #[test]
    fn decision_lines() {
        let r = run(concat!(
            "check bob doc \"view TextDocument.body\"\n",
            "check alice doc \"view TextDocument.body\"\n",
            "permit-global agent:bob \"do_anything\" allow\n",
            "check bob doc \"view TextDocument.body\"\n",
        ))
        .unwrap();
        assert_eq!(
            r.render(),
            concat!(
                "check bob doc \"view TextDocument.body\": DENIED level=- reason=closed_world\n",
                "check alice doc \"view TextDocument.body\": ALLOWED level=1 reason=level_comparison via=OneToOne(allow)\n",
                "check bob doc \"view TextDocument.body\": ALLOWED level=- reason=global_override\n",
            )
        );
    }

    #[test]
    fn guarded_mutation_halts_with_line() {
        let text = format!(
            "{BASE}check alice doc \"delete\"\npermit all item:doc \"delete\" allow as=bob\ncheck bob doc \"delete\"\n"
        );
        let directives = crate::scenario::parse_scenario(&text).unwrap();
        let run = execute(&directives);
        assert_eq!(run.outputs.len(), 1);
        let err = run.halted.unwrap();
        assert_eq!(err.line, 8);
        assert!(err.is_authorization());
    }

    #[test]
    fn unknown_reference_is_not_authorization() {
        let Err(ScenarioError::Exec(e)) = run("check carol doc \"delete\"\n") else {
            panic!("expected an execution error");
        };
        assert!(!e.is_authorization());
        assert_eq!(e.source, Error::UnknownEntity("carol".into()));
    }

    #[test]
    fn member_on_existing_edge_flips_the_flag() {
        let r = run("member team bob enabled=false\n").unwrap();
        let (team, bob) = (r.world.lookup("team").unwrap(), r.world.lookup("bob").unwrap());
        assert!(!r.world.membership(team, bob).unwrap().enabled);
    }

    #[test]
    fn filter_lists_in_creation_order() {
        let r = run(concat!(
            "item a type=Document\nitem b type=Document\n",
            "permit all all \"view Item.name\" allow\n",
            "permit all item:team \"view Item.name\" deny\n",
            "filter anonymous \"view Item.name\"\n",
        ))
        .unwrap();
        assert_eq!(
            r.outputs.last().unwrap().to_string(),
            "filter anonymous \"view Item.name\": anonymous alice bob doc a b"
        );
    }

    #[test]
    fn same_text_same_output() {
        let text = format!(
            "{BASE}permit group:team all \"delete\" deny\nexplain alice doc \"delete\"\nlint bob doc \"delete\"\n"
        );
        let a = run_scenario(&text).unwrap().render();
        let b = run_scenario(&text).unwrap().render();
        assert_eq!(a, b);
        assert!(a.contains("  * 1 OneToOne(allow) agent:alice item:doc \"do_anything\""));
    }
}
