//! The Cross-Entropy loop with iteration-best reinforcement and max-min
//! calibration.
//!
//! Each iteration draws `N` tours from the current matrix, orders them by
//! `(cost, draw index)`, reinforces the `M` best and clamps the result into
//! the calibration bounds. Draw `i` of iteration `t` uses its own stream
//! derived from `(seed, t, i)`, so traces do not depend on thread count.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::generation::{draw, Scheme};
use crate::instance::Instance;
use crate::pheromone::{elite_weights, update, Bounds, PheromoneMatrix};
use crate::rng::derived_rng;
use crate::tour::{shared_edges, Tour};

/// Below this sample size draws run on the calling thread.
const PARALLEL_DRAW_THRESHOLD: usize = 32;

/// Relative tolerance when comparing a cost against the target.
pub const TARGET_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CeConfig {
    /// `N`, tours drawn per iteration.
    pub sample_size: usize,
    /// `M`, elites reinforced per iteration.
    pub elite_size: usize,
    pub rho: f64,
    /// Calibration bounds; `None` means the defaults for the instance size.
    pub bounds: Option<Bounds>,
    pub scheme: Scheme,
    pub max_iterations: u64,
    /// Stop as soon as an iteration-best tour reaches this cost.
    pub target_cost: Option<f64>,
    pub seed: u64,
    /// Record per-iteration wall time. Off by default so traces replay
    /// byte for byte.
    #[serde(default)]
    pub record_wall_time: bool,
}

impl CeConfig {
    /// `M = 1`, `rho = 1`, default bounds, no target.
    pub fn new(scheme: Scheme, sample_size: usize, max_iterations: u64, seed: u64) -> Self {
        CeConfig {
            sample_size,
            elite_size: 1,
            rho: 1.0,
            bounds: None,
            scheme,
            max_iterations,
            target_cost: None,
            seed,
            record_wall_time: false,
        }
    }

    pub fn with_target(mut self, target: Option<f64>) -> Self {
        self.target_cost = target;
        self
    }

    pub fn resolved_bounds(&self, n: usize) -> Bounds {
        self.bounds.unwrap_or_else(|| Bounds::for_n(n))
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if n < 4 {
            return Err(invalid(format!("the optimizer needs n >= 4, got {n}")));
        }
        if self.sample_size == 0 {
            return Err(invalid("sample size N must be at least 1"));
        }
        if self.elite_size == 0 || self.elite_size > self.sample_size {
            return Err(invalid(format!("elite size M={} must lie in 1..=N={}", self.elite_size, self.sample_size)));
        }
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(invalid(format!("rho must lie in (0, 1], got {}", self.rho)));
        }
        if let Some(b) = self.bounds {
            Bounds::new(b.pi_min, b.pi_max)?;
        }
        Ok(())
    }
}

/// Whether `cost` reaches `target` up to [`TARGET_RTOL`].
pub fn reaches_target(cost: f64, target: f64) -> bool {
    cost <= target + TARGET_RTOL * target.abs().max(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// 1-based iteration number.
    pub t: u64,
    pub best_cost: f64,
    pub best_so_far: f64,
    pub shared_edges: Option<usize>,
    pub wall_nanos: u64,
}

/// What an observer sees after each iteration.
pub struct IterationView<'a> {
    pub record: &'a IterationRecord,
    /// `X_t^{[1]}`, the iteration-best tour.
    pub best: &'a Tour,
    /// The matrix after this iteration's update.
    pub matrix: &'a PheromoneMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub iterations: u64,
    /// First iteration whose best tour reached the target.
    pub hit_iteration: Option<u64>,
    pub total_evaluations: u64,
    pub best_cost: f64,
    /// Best tour over the whole run (first one found among equal costs).
    pub best_tour: Tour,
    /// Iteration-best tour of the final iteration.
    pub last_tour: Tour,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub records: Vec<IterationRecord>,
    pub summary: RunSummary,
}

/// Indices of the `m` best samples ordered by `(cost, index)`.
pub fn sort_and_select(costs: &[f64], m: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..costs.len()).collect();
    order.sort_by(|&a, &b| costs[a].total_cmp(&costs[b]).then(a.cmp(&b)));
    order.truncate(m);
    order
}

fn draw_samples(
    instance: &Instance,
    pi: &PheromoneMatrix,
    scheme: Scheme,
    seed: u64,
    t: u64,
    count: usize,
) -> Vec<(Tour, f64)> {
    let one = |i: usize| {
        let mut rng = derived_rng(seed, &[t, i as u64]);
        let tour = draw(scheme, pi, &mut rng);
        let cost = instance.cost_unchecked(tour.perm());
        (tour, cost)
    };
    if count >= PARALLEL_DRAW_THRESHOLD {
        (0..count).into_par_iter().map(one).collect()
    } else {
        (0..count).map(one).collect()
    }
}

/// Runs the loop, calling `observer` after every iteration.
pub fn run_observed<F>(
    instance: &Instance,
    config: &CeConfig,
    known_optimum: Option<&Tour>,
    mut observer: F,
) -> Result<RunSummary>
where
    F: FnMut(&IterationView<'_>),
{
    let n = instance.n();
    config.validate(n)?;
    if let Some(opt) = known_optimum {
        if opt.n() != n {
            return Err(invalid("known optimum has the wrong size"));
        }
    }
    let bounds = config.resolved_bounds(n);
    let mut pi = PheromoneMatrix::uniform(n)?;
    let mut best_so_far = f64::INFINITY;
    let mut best_tour = None;
    let mut last_tour = None;
    let mut hit_iteration = None;
    let mut iterations = 0;

    for t in 1..=config.max_iterations {
        let started = config.record_wall_time.then(Instant::now);
        let samples = draw_samples(instance, &pi, config.scheme, config.seed, t, config.sample_size);
        let costs: Vec<f64> = samples.iter().map(|s| s.1).collect();
        let elite_idx = sort_and_select(&costs, config.elite_size);
        let elites: Vec<&Tour> = elite_idx.iter().map(|&i| &samples[i].0).collect();
        pi = update(&pi, &elite_weights(&elites)?, config.rho, bounds)?;

        let (best, best_cost) = &samples[elite_idx[0]];
        if *best_cost < best_so_far {
            best_so_far = *best_cost;
            best_tour = Some(best.clone());
        }
        let record = IterationRecord {
            t,
            best_cost: *best_cost,
            best_so_far,
            shared_edges: known_optimum.map(|opt| shared_edges(best, opt).expect("sizes checked")),
            wall_nanos: started.map_or(0, |s| s.elapsed().as_nanos() as u64),
        };
        observer(&IterationView { record: &record, best, matrix: &pi });
        iterations = t;
        let hit = config.target_cost.is_some_and(|target| reaches_target(*best_cost, target));
        last_tour = Some(best.clone());
        if hit {
            hit_iteration = Some(t);
            break;
        }
    }

    let best_tour = best_tour.ok_or_else(|| invalid("max_iterations must be at least 1"))?;
    Ok(RunSummary {
        iterations,
        hit_iteration,
        total_evaluations: iterations * config.sample_size as u64,
        best_cost: best_so_far,
        best_tour,
        last_tour: last_tour.expect("at least one iteration"),
    })
}

/// Runs the loop and keeps every iteration record.
pub fn run(instance: &Instance, config: &CeConfig, known_optimum: Option<&Tour>) -> Result<RunTrace> {
    let mut records = Vec::new();
    let summary = run_observed(instance, config, known_optimum, |view| records.push(view.record.clone()))?;
    Ok(RunTrace { records, summary })
}

pub const TRACE_HEADER: [&str; 5] = ["t", "best_cost", "best_so_far", "shared_edges", "wall_nanos"];

/// Trace CSV; `shared_edges` is empty when no optimum was supplied.
pub fn write_trace_csv<W: Write>(records: &[IterationRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for r in records {
        w.write_record([
            r.t.to_string(),
            r.best_cost.to_string(),
            r.best_so_far.to_string(),
            r.shared_edges.map(|s| s.to_string()).unwrap_or_default(),
            r.wall_nanos.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Deserialize)]
struct TraceRow {
    t: u64,
    best_cost: f64,
    best_so_far: f64,
    shared_edges: Option<usize>,
    wall_nanos: u64,
}

pub fn read_trace_csv<R: std::io::Read>(input: R) -> Result<Vec<IterationRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    if headers.iter().ne(TRACE_HEADER) {
        return Err(invalid(format!("unexpected trace header: {headers:?}")));
    }
    r.deserialize::<TraceRow>()
        .map(|row| {
            let row = row?;
            Ok(IterationRecord {
                t: row.t,
                best_cost: row.best_cost,
                best_so_far: row.best_so_far,
                shared_edges: row.shared_edges,
                wall_nanos: row.wall_nanos,
            })
        })
        .collect()
}
