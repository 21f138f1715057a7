//! Scaling benchmark for permission-filtered listing queries.
//!
//! For each site size the benchmark times two queries over the same world:
//! listing every item whose name the anonymous agent may view, and listing
//! every item with no permission check at all. Both render one text row per
//! returned item into a reused buffer. Each point is the mean of `reps` timed
//! runs on a monotonic clock; world construction and a warm-up pass are not
//! timed. Both series are then fitted by ordinary least squares against item
//! count.

use std::fmt::Write;
use std::hint::black_box;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::generate::{random_world, WorldGenParams};
use crate::registry::VIEW_NAME;
use crate::world::{Entity, World};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BenchError {
    #[error("no site sizes given")]
    EmptySizes,
    #[error("site sizes must be strictly ascending")]
    UnsortedSizes,
    #[error("a line fit needs at least two distinct x values")]
    DegenerateFit,
    #[error("repetition count must be positive")]
    ZeroReps,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Least-squares line through `points`.
pub fn fit_line(points: &[(f64, f64)]) -> Result<LinearFit, BenchError> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return Err(BenchError::DegenerateFit);
    }
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    if sxx == 0.0 {
        return Err(BenchError::DegenerateFit);
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_tot: f64 = points.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let ss_res: f64 = points.iter().map(|p| (p.1 - (intercept + slope * p.0)).powi(2)).sum();
    let r_squared = if ss_tot == 0.0 {
        1.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BenchPoint {
    pub users: usize,
    pub item_count: usize,
    pub visible_count: usize,
    pub t_filtered_ns: f64,
    pub t_unfiltered_ns: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub seed: u64,
    pub reps: usize,
    pub points: Vec<BenchPoint>,
    pub filtered: LinearFit,
    pub unfiltered: LinearFit,
}

impl BenchReport {
    /// Marginal per-item cost of the filtered query relative to the
    /// unfiltered one.
    pub fn slope_ratio(&self) -> f64 {
        self.filtered.slope / self.unfiltered.slope
    }
}

/// Appends one tab-separated result line for `e`: id, name, type, creator.
fn render_row(world: &World, e: &Entity, out: &mut String) {
    let creator = e.creator.map_or("-", |c| world.name_of(c));
    let ty = world.registry().by_id(e.type_id).name();
    // Writing into a String cannot fail.
    let _ = writeln!(out, "{}\t{}\t{}\t{}", e.id.index(), e.name, ty, creator);
}

/// Renders every item, no permission checks. Returns the row count.
pub fn list_all(world: &World, out: &mut String) -> usize {
    out.clear();
    let mut n = 0;
    for e in world.entities() {
        render_row(world, e, out);
        n += 1;
    }
    n
}

/// Renders the items whose name the anonymous agent may view. Returns the
/// row count.
pub fn list_visible_to_anonymous(world: &World, out: &mut String) -> usize {
    out.clear();
    let anonymous = world.anonymous().expect("benchmark worlds enable anonymous");
    let ids = world
        .filter_items(anonymous, VIEW_NAME)
        .expect("view Item.name is an item ability");
    for &id in &ids {
        render_row(world, world.entity(id).expect("filtered ids are live"), out);
    }
    ids.len()
}

/// Cumulative nanoseconds this thread has spent runnable but waiting for a
/// CPU, where the kernel exposes it.
fn run_queue_wait_ns() -> Option<u64> {
    let stat = std::fs::read_to_string("/proc/thread-self/schedstat").ok()?;
    stat.split_whitespace().nth(1)?.parse().ok()
}

/// Upper bound on re-timing a single run that keeps getting descheduled.
const MAX_RETRIES: usize = 50;

/// Wall-clock time of one call to `f`. A call during which the thread sat
/// in the run queue is re-timed, so the result measures the query and not
/// time spent descheduled.
fn time_ns<T>(mut f: impl FnMut() -> T) -> u128 {
    let mut attempt = 0;
    loop {
        let before = run_queue_wait_ns();
        let start = Instant::now();
        black_box(f());
        let elapsed = start.elapsed().as_nanos();
        let preempted = matches!((before, run_queue_wait_ns()), (Some(a), Some(b)) if b > a);
        if !preempted || attempt == MAX_RETRIES {
            return elapsed;
        }
        attempt += 1;
    }
}

/// Times both queries for each site size and fits lines through them.
/// `params.users` is overridden by each entry of `sizes`.
pub fn run_scaling_benchmark(sizes: &[usize], params: &WorldGenParams, reps: usize) -> Result<BenchReport, BenchError> {
    if sizes.is_empty() {
        return Err(BenchError::EmptySizes);
    }
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(BenchError::UnsortedSizes);
    }
    if sizes.len() < 2 {
        return Err(BenchError::DegenerateFit);
    }
    if reps == 0 {
        return Err(BenchError::ZeroReps);
    }

    // Build every site first so allocation churn from construction does not
    // land inside a timed window.
    let worlds: Vec<(usize, World)> = sizes
        .iter()
        .map(|&users| (users, random_world(&WorldGenParams { users, ..*params })))
        .collect();

    // One untimed warm-up pass, then `reps` rounds. Each round times one run
    // of both queries on every site, so slow stretches on a shared machine
    // are spread across all sizes instead of skewing a single point.
    let mut filtered_ns = vec![0u128; worlds.len()];
    let mut unfiltered_ns = vec![0u128; worlds.len()];
    let mut visible = vec![0usize; worlds.len()];
    let mut out = String::new();
    for (i, (_, world)) in worlds.iter().enumerate() {
        visible[i] = list_visible_to_anonymous(world, &mut out);
        black_box(list_all(world, &mut out));
    }
    for _ in 0..reps {
        for (i, (_, world)) in worlds.iter().enumerate() {
            filtered_ns[i] += time_ns(|| list_visible_to_anonymous(world, &mut out));
            unfiltered_ns[i] += time_ns(|| list_all(world, &mut out));
        }
    }
    let points: Vec<BenchPoint> = worlds
        .iter()
        .enumerate()
        .map(|(i, (users, world))| BenchPoint {
            users: *users,
            item_count: world.entity_count(),
            visible_count: visible[i],
            t_filtered_ns: filtered_ns[i] as f64 / reps as f64,
            t_unfiltered_ns: unfiltered_ns[i] as f64 / reps as f64,
        })
        .collect();

    let series =
        |f: fn(&BenchPoint) -> f64| -> Vec<(f64, f64)> { points.iter().map(|p| (p.item_count as f64, f(p))).collect() };
    let filtered = fit_line(&series(|p| p.t_filtered_ns))?;
    let unfiltered = fit_line(&series(|p| p.t_unfiltered_ns))?;
    Ok(BenchReport {
        seed: params.seed,
        reps,
        points,
        filtered,
        unfiltered,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line_fits_perfectly() {
        let pts: Vec<(f64, f64)> = (1..=10).map(|x| (x as f64, 3.5 * x as f64 + 2.0)).collect();
        let fit = fit_line(&pts).unwrap();
        assert!((fit.slope - 3.5).abs() < 1e-12);
        assert!((fit.intercept - 2.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn closed_form_r_squared() {
        // mean x = mean y = 2.5, Sxx = 5, Sxy = 3, so slope 0.6 and
        // intercept 1.0; SStot = 5, SSres = SStot - slope * Sxy = 3.2.
        let pts = [(1.0, 2.0), (2.0, 1.0), (3.0, 4.0), (4.0, 3.0)];
        let fit = fit_line(&pts).unwrap();
        assert!((fit.slope - 0.6).abs() < 1e-12);
        assert!((fit.intercept - 1.0).abs() < 1e-12);
        assert!((fit.r_squared - (1.0 - 3.2 / 5.0)).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        assert_eq!(fit_line(&[(1.0, 1.0)]), Err(BenchError::DegenerateFit));
        assert_eq!(fit_line(&[(1.0, 1.0), (1.0, 2.0)]), Err(BenchError::DegenerateFit));
        let params = WorldGenParams::default();
        assert_eq!(run_scaling_benchmark(&[], &params, 10), Err(BenchError::EmptySizes));
        assert_eq!(
            run_scaling_benchmark(&[10], &params, 10),
            Err(BenchError::DegenerateFit)
        );
        assert_eq!(
            run_scaling_benchmark(&[20, 10], &params, 10),
            Err(BenchError::UnsortedSizes)
        );
        assert_eq!(run_scaling_benchmark(&[1, 2], &params, 0), Err(BenchError::ZeroReps));
    }

    use crate::world::EntityId;

    #[test]
    fn filtered_listing_agrees_with_pointwise_checks() {
        let world = random_world(&WorldGenParams {
            users: 8,
            ..Default::default()
        });
        let anonymous = world.anonymous().unwrap();
        let expected: Vec<EntityId> = world
            .entities()
            .filter(|e| world.resolve_item_ability(anonymous, e.id, VIEW_NAME).unwrap().allowed)
            .map(|e| e.id)
            .collect();
        let mut out = String::new();
        let n = list_visible_to_anonymous(&world, &mut out);
        let got: Vec<EntityId> = out
            .lines()
            .map(|l| world.lookup(l.split('\t').nth(1).unwrap()).unwrap())
            .collect();
        assert_eq!(n, got.len());
        assert_eq!(got, expected);
        assert!(!got.is_empty());
        assert!(got.len() < world.entity_count());
    }

    #[test]
    fn small_run_produces_a_report() {
        let report = run_scaling_benchmark(&[2, 4, 6], &WorldGenParams::default(), 2).unwrap();
        assert_eq!(report.points.len(), 3);
        assert!(report.points.windows(2).all(|w| w[0].item_count < w[1].item_count));
        assert!((0.0..=1.0).contains(&report.filtered.r_squared));
    }
}
