//! Runtime experiments: sweeps of independent optimizer runs with
//! iteration budgets derived from the analytic runtime bounds.
//!
//! A design names an instance family, a sweep of sizes, a rule for the
//! sample size `N`, a scheme, a trial count and a budget rule. Each trial
//! derives its seeds from `(master seed, cell, trial)`, so any cell can be
//! re-run on its own and reports do not depend on thread scheduling.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::crossings::{count_intersections, jump_distance};
use crate::analysis::oracle::held_karp;
use crate::analysis::stats::{mean, median, wilson};
use crate::error::{invalid, Result};
use crate::generation::Scheme;
use crate::instance::{make_g1, make_grid, make_grid_with_interior, GridMeta, Instance};
use crate::optimizer::{run_observed, CeConfig};
use crate::rng::derive_seed;
use crate::tour::{hull_order_respected, Tour};

/// Iteration cap applied to grid budgets unless the design sets its own.
pub const GRID_BUDGET_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    G1,
    Grid,
}

/// Rule for the per-iteration sample size `N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum SampleRule {
    /// `ceil(n^x)`.
    PowN(f64),
    /// `ceil(m^x)`, grid side `m`.
    PowM(f64),
    /// `ceil((ln n)^2)`.
    LogSquared,
    Const(usize),
}

impl SampleRule {
    pub fn sample_size(self, n: usize, m: Option<i64>) -> Result<usize> {
        let nf = n as f64;
        let size = match self {
            SampleRule::PowN(x) => nf.powf(x).ceil(),
            SampleRule::PowM(x) => {
                let m = m.ok_or_else(|| invalid("an m-based sample rule needs a grid family"))?;
                (m as f64).powf(x).ceil()
            }
            SampleRule::LogSquared => nf.ln().powi(2).ceil(),
            SampleRule::Const(k) => k as f64,
        };
        if size < 1.0 {
            return Err(invalid(format!("sample rule {self} gives N < 1")));
        }
        Ok(size as usize)
    }
}

impl fmt::Display for SampleRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SampleRule::PowN(x) => write!(f, "pow:{x}"),
            SampleRule::PowM(x) => write!(f, "mpow:{x}"),
            SampleRule::LogSquared => write!(f, "log2"),
            SampleRule::Const(k) => write!(f, "const:{k}"),
        }
    }
}

fn parse_number<T: FromStr>(rule: &str, arg: &str) -> Result<T, String> {
    arg.parse().map_err(|_| format!("bad argument in rule {rule:?}"))
}

impl FromStr for SampleRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            Some(("pow", x)) => Ok(SampleRule::PowN(parse_number(s, x)?)),
            Some(("mpow", x)) => Ok(SampleRule::PowM(parse_number(s, x)?)),
            Some(("const", k)) => Ok(SampleRule::Const(parse_number(s, k)?)),
            None if s == "log2" => Ok(SampleRule::LogSquared),
            _ => Err(format!("unknown sample rule {s:?}")),
        }
    }
}

impl TryFrom<String> for SampleRule {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<SampleRule> for String {
    fn from(r: SampleRule) -> String {
        r.to_string()
    }
}

/// Rule for the per-trial iteration budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum BudgetRule {
    /// `n` iterations.
    N,
    /// `n^6`.
    N6,
    /// `ceil(n^3 ln n)`.
    N3LnN,
    /// Grid runtime bounds: `n^4 m^5` (vertex) or `n^3 m^5` (edge) when every
    /// vertex is on the hull, otherwise `n m^5 + n^(6k-4)` (vertex) or
    /// `n m^5 + n^(3k-2)` (edge) with `k` interior vertices.
    ThmGrid,
    Const(u64),
    /// `floor(E / N)` iterations, i.e. a fixed number of evaluations.
    Evals(u64),
}

impl BudgetRule {
    /// Uncapped budget as a float; may exceed `u64`.
    pub fn raw_budget(self, n: usize, meta: Option<&GridMeta>, scheme: Scheme, sample_size: usize) -> Result<f64> {
        let nf = n as f64;
        Ok(match self {
            BudgetRule::N => nf,
            BudgetRule::N6 => nf.powi(6),
            BudgetRule::N3LnN => (nf.powi(3) * nf.ln()).ceil(),
            BudgetRule::ThmGrid => {
                let meta = meta.ok_or_else(|| invalid("thm_grid budgets need a grid family"))?;
                let m5 = (meta.m as f64).powi(5);
                let k = meta.interior_count as i32;
                match (scheme, k) {
                    (Scheme::VertexBased, 0) => nf.powi(4) * m5,
                    (Scheme::EdgeBased, 0) => nf.powi(3) * m5,
                    (Scheme::VertexBased, k) => nf * m5 + nf.powi(6 * k - 4),
                    (Scheme::EdgeBased, k) => nf * m5 + nf.powi(3 * k - 2),
                }
            }
            BudgetRule::Const(b) => b as f64,
            BudgetRule::Evals(e) => (e / sample_size as u64) as f64,
        })
    }
}

impl fmt::Display for BudgetRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BudgetRule::N => write!(f, "n"),
            BudgetRule::N6 => write!(f, "n6"),
            BudgetRule::N3LnN => write!(f, "n3lnn"),
            BudgetRule::ThmGrid => write!(f, "thm_grid"),
            BudgetRule::Const(b) => write!(f, "const:{b}"),
            BudgetRule::Evals(e) => write!(f, "evals:{e}"),
        }
    }
}

impl FromStr for BudgetRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "n" => Ok(BudgetRule::N),
            "n6" => Ok(BudgetRule::N6),
            "n3lnn" => Ok(BudgetRule::N3LnN),
            "thm_grid" => Ok(BudgetRule::ThmGrid),
            _ => match s.split_once(':') {
                Some(("const", b)) => Ok(BudgetRule::Const(parse_number(s, b)?)),
                Some(("evals", e)) => Ok(BudgetRule::Evals(parse_number(s, e)?)),
                _ => Err(format!("unknown budget rule {s:?}")),
            },
        }
    }
}

impl TryFrom<String> for BudgetRule {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<BudgetRule> for String {
    fn from(r: BudgetRule) -> String {
        r.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Sweep {
    pub n: Vec<usize>,
    /// Grid side per `n` entry.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<Vec<i64>>,
    /// Grid side `m = mFactor * n`, when `m` is not listed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_factor: Option<i64>,
    /// Exact interior vertex count for grid instances; unconstrained when
    /// absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interior: Option<usize>,
}

/// Frozen pass criteria checked by `--assert`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct AssertSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_success_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_success_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_nonmonotone_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Design {
    pub family: Family,
    pub sweep: Sweep,
    pub n_rule: SampleRule,
    pub scheme: Scheme,
    pub trials: usize,
    pub budget_rule: BudgetRule,
    pub master_seed: u64,
    /// Iteration cap; grid designs default to [`GRID_BUDGET_CAP`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget_cap: Option<u64>,
    /// For grid cells: search up to this many jump moves from every
    /// intersection-free, non-optimal iteration-best tour to the optimum.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jump_check: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assert: Option<AssertSpec>,
}

impl Design {
    pub fn from_json(s: &str) -> Result<Self> {
        let d: Design = serde_json::from_str(s)?;
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sweep.n.is_empty() || self.trials == 0 {
            return Err(invalid("design needs a non-empty sweep and at least one trial"));
        }
        if let Some(ms) = &self.sweep.m {
            if ms.len() != self.sweep.n.len() {
                return Err(invalid("sweep.m must list one side per n"));
            }
        }
        if self.family == Family::Grid && self.sweep.m.is_none() && self.sweep.m_factor.is_none() {
            return Err(invalid("grid designs need sweep.m or sweep.mFactor"));
        }
        Ok(())
    }

    fn grid_side(&self, cell: usize) -> Option<i64> {
        match self.family {
            Family::G1 => None,
            Family::Grid => Some(match &self.sweep.m {
                Some(ms) => ms[cell],
                None => self.sweep.m_factor.expect("validated") * self.sweep.n[cell] as i64,
            }),
        }
    }

    fn cap(&self) -> Option<u64> {
        self.budget_cap.or(match self.family {
            Family::G1 => None,
            Family::Grid => Some(GRID_BUDGET_CAP),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TrialResult {
    pub budget: u64,
    pub hit_iteration: Option<u64>,
    pub evaluations: u64,
    /// Iterations whose best cost exceeded the previous iteration's.
    pub cost_increases: u64,
    /// Iterations whose best tour shares fewer edges with the optimum than
    /// the previous iteration's.
    pub shared_edge_decreases: u64,
    /// Shared edges rose strictly in every iteration before the hit.
    pub strict_progress: bool,
    /// Hit tour equals the oracle tour, respects hull order and has no
    /// crossings (grid hits only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hit_valid: Option<bool>,
    /// Intersection-free, non-optimal iteration-best tours examined.
    pub jump_checked: u64,
    pub jump_max: Option<usize>,
    /// Tours needing more than the allowed number of jump moves.
    pub jump_violations: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CellReport {
    pub cell: usize,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<i64>,
    pub sample_size: usize,
    /// Largest per-trial budget after capping.
    pub budget: u64,
    /// Trials whose analytic budget was cut by the cap.
    pub capped_trials: usize,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub success_ci99: (f64, f64),
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_hit_iteration: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub median_hit_iteration: Option<f64>,
    pub mean_evaluations: f64,
    /// Trials whose iteration-best cost rose at least once.
    pub nonmonotone_fraction: f64,
    pub mean_shared_edge_decreases: f64,
    /// Trials without strict shared-edge progress up to the hit.
    pub progress_violations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub invalid_hits: Option<usize>,
    pub jump_checked: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jump_max: Option<usize>,
    pub jump_violations: u64,
    pub results: Vec<TrialResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExperimentReport {
    pub design: Design,
    pub cells: Vec<CellReport>,
}

struct TrialSetup {
    instance: Instance,
    meta: Option<GridMeta>,
    optimum: Tour,
    optimum_cost: f64,
}

fn setup_trial(design: &Design, cell: usize, trial: usize) -> Result<TrialSetup> {
    let n = design.sweep.n[cell];
    match design.family {
        Family::G1 => {
            let instance = make_g1(n)?;
            Ok(TrialSetup { optimum: Tour::identity(n), optimum_cost: n as f64, instance, meta: None })
        }
        Family::Grid => {
            let m = design.grid_side(cell).expect("grid family");
            let seed = derive_seed(design.master_seed, &[cell as u64, trial as u64, 0]);
            let (instance, meta) = match design.sweep.interior {
                Some(k) => make_grid_with_interior(n, m, k, seed)?,
                None => make_grid(n, m, seed)?,
            };
            let oracle = held_karp(&instance)?;
            Ok(TrialSetup {
                instance,
                meta: Some(meta),
                optimum: oracle.optimal_tour,
                optimum_cost: oracle.optimal_cost,
            })
        }
    }
}

/// Runs one trial of one cell.
pub fn run_trial(design: &Design, cell: usize, trial: usize) -> Result<TrialResult> {
    let n = design.sweep.n[cell];
    let setup = setup_trial(design, cell, trial)?;
    let sample_size = design.n_rule.sample_size(n, design.grid_side(cell))?;
    let raw = design.budget_rule.raw_budget(n, setup.meta.as_ref(), design.scheme, sample_size)?;
    let mut budget = if raw >= u64::MAX as f64 { u64::MAX } else { raw as u64 };
    if let Some(cap) = design.cap() {
        budget = budget.min(cap);
    }
    let seed = derive_seed(design.master_seed, &[cell as u64, trial as u64, 1]);
    let config = CeConfig::new(design.scheme, sample_size, budget, seed).with_target(Some(setup.optimum_cost));

    let mut prev: Option<(f64, usize)> = None;
    let mut cost_increases = 0;
    let mut shared_edge_decreases = 0;
    let mut strict_progress = true;
    let mut jump_checked = 0;
    let mut jump_max: Option<usize> = None;
    let mut jump_violations = 0;
    let mut jump_cache: HashMap<Tour, Option<usize>> = HashMap::new();
    let mut hit_tour: Option<Tour> = None;
    let optimum = &setup.optimum;

    let summary = run_observed(&setup.instance, &config, Some(optimum), |view| {
        let r = view.record;
        let shared = r.shared_edges.expect("optimum supplied");
        if let Some((pc, ps)) = prev {
            if r.best_cost > pc {
                cost_increases += 1;
            }
            if shared < ps {
                shared_edge_decreases += 1;
            }
            if shared <= ps {
                strict_progress = false;
            }
        }
        prev = Some((r.best_cost, shared));
        if shared == n {
            hit_tour = Some(view.best.clone());
        } else if let Some(max_jumps) = design.jump_check {
            let crossings = count_intersections(&setup.instance, view.best).expect("grid instance");
            if crossings == 0 {
                let d = *jump_cache
                    .entry(view.best.clone())
                    .or_insert_with(|| jump_distance(view.best, optimum, max_jumps));
                jump_checked += 1;
                match d {
                    Some(d) => jump_max = jump_max.max(Some(d)),
                    None => jump_violations += 1,
                }
            }
        }
    })?;

    let hit_valid = match (&setup.meta, summary.hit_iteration) {
        (Some(meta), Some(_)) => Some(hit_tour.as_ref().is_some_and(|t| {
            t == optimum
                && hull_order_respected(t, meta)
                && count_intersections(&setup.instance, t).expect("grid instance") == 0
        })),
        _ => None,
    };
    Ok(TrialResult {
        budget,
        hit_iteration: summary.hit_iteration,
        evaluations: summary.total_evaluations,
        cost_increases,
        shared_edge_decreases,
        strict_progress,
        hit_valid,
        jump_checked,
        jump_max,
        jump_violations,
    })
}

fn cell_report(design: &Design, cell: usize, results: Vec<TrialResult>) -> Result<CellReport> {
    let n = design.sweep.n[cell];
    let m = design.grid_side(cell);
    let trials = results.len();
    let hits: Vec<f64> = results.iter().filter_map(|r| r.hit_iteration.map(|h| h as f64)).collect();
    let successes = hits.len();
    let cap = design.cap();
    let capped_trials = match cap {
        Some(c) => results.iter().filter(|r| r.budget == c).count(),
        None => 0,
    };
    let evals: Vec<f64> = results.iter().map(|r| r.evaluations as f64).collect();
    let invalid_hits = match design.family {
        Family::Grid => Some(results.iter().filter(|r| r.hit_valid == Some(false)).count()),
        Family::G1 => None,
    };
    Ok(CellReport {
        cell,
        n,
        m,
        sample_size: design.n_rule.sample_size(n, m)?,
        budget: results.iter().map(|r| r.budget).max().unwrap_or(0),
        capped_trials,
        trials,
        successes,
        success_rate: successes as f64 / trials as f64,
        success_ci99: wilson(successes as u64, trials as u64, 0.99),
        mean_hit_iteration: mean(&hits),
        median_hit_iteration: median(&hits),
        mean_evaluations: mean(&evals).unwrap_or(0.0),
        nonmonotone_fraction: results.iter().filter(|r| r.cost_increases > 0).count() as f64 / trials as f64,
        mean_shared_edge_decreases: results.iter().map(|r| r.shared_edge_decreases as f64).sum::<f64>() / trials as f64,
        progress_violations: results.iter().filter(|r| r.hit_iteration.is_some() && !r.strict_progress).count(),
        invalid_hits,
        jump_checked: results.iter().map(|r| r.jump_checked).sum(),
        jump_max: results.iter().filter_map(|r| r.jump_max).max(),
        jump_violations: results.iter().map(|r| r.jump_violations).sum(),
        results,
    })
}

/// Runs every cell of the design.
pub fn run_experiment(design: &Design) -> Result<ExperimentReport> {
    design.validate()?;
    let cells = design.sweep.n.len();
    let jobs: Vec<(usize, usize)> = (0..cells).flat_map(|c| (0..design.trials).map(move |t| (c, t))).collect();
    let results: Vec<TrialResult> = jobs.par_iter().map(|&(c, t)| run_trial(design, c, t)).collect::<Result<_>>()?;
    let mut it = results.into_iter();
    let cells =
        (0..cells).map(|c| cell_report(design, c, it.by_ref().take(design.trials).collect())).collect::<Result<_>>()?;
    Ok(ExperimentReport { design: design.clone(), cells })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssertOutcome {
    pub cell: usize,
    pub criterion: String,
    pub observed: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Checks every cell against the design's frozen criteria. Grid cells also
/// fail on invalid hits or jump-search violations.
pub fn check_assertions(report: &ExperimentReport) -> Vec<AssertOutcome> {
    let spec = report.design.assert.clone().unwrap_or_default();
    let mut out = Vec::new();
    for c in &report.cells {
        let mut push = |criterion: &str, observed: f64, threshold: f64, pass: bool| {
            out.push(AssertOutcome { cell: c.cell, criterion: criterion.to_string(), observed, threshold, pass })
        };
        if let Some(t) = spec.min_success_rate {
            push("minSuccessRate", c.success_rate, t, c.success_rate >= t);
        }
        if let Some(t) = spec.max_success_rate {
            push("maxSuccessRate", c.success_rate, t, c.success_rate <= t);
        }
        if let Some(t) = spec.min_nonmonotone_fraction {
            push("minNonmonotoneFraction", c.nonmonotone_fraction, t, c.nonmonotone_fraction >= t);
        }
        if let Some(bad) = c.invalid_hits {
            push("invalidHits", bad as f64, 0.0, bad == 0);
        }
        if report.design.jump_check.is_some() {
            push("jumpViolations", c.jump_violations as f64, 0.0, c.jump_violations == 0);
        }
    }
    out
}

pub const CSV_HEADER: [&str; 13] = [
    "cell",
    "n",
    "m",
    "N",
    "budget",
    "trials",
    "successes",
    "success_rate",
    "ci_low",
    "ci_high",
    "mean_hit",
    "median_hit",
    "nonmonotone_fraction",
];

fn opt_str<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_report_csv<W: Write>(report: &ExperimentReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for c in &report.cells {
        w.write_record([
            c.cell.to_string(),
            c.n.to_string(),
            opt_str(c.m),
            c.sample_size.to_string(),
            c.budget.to_string(),
            c.trials.to_string(),
            c.successes.to_string(),
            c.success_rate.to_string(),
            c.success_ci99.0.to_string(),
            c.success_ci99.1.to_string(),
            opt_str(c.mean_hit_iteration),
            opt_str(c.median_hit_iteration),
            c.nonmonotone_fraction.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// gnuplot data: `n success_rate ci_low ci_high`, one line per cell.
pub fn write_report_dat<W: Write>(report: &ExperimentReport, mut out: W) -> Result<()> {
    writeln!(out, "# n success_rate ci_low ci_high")?;
    for c in &report.cells {
        writeln!(out, "{} {} {} {}", c.n, c.success_rate, c.success_ci99.0, c.success_ci99.1)?;
    }
    Ok(())
}
