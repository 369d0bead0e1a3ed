//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 capacity or instance
//! generation failure, 3 failed `--assert` check. Every subcommand prints
//! its fully resolved configuration as one JSON line on stderr and embeds it
//! in its JSON output.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;
use serde::Serialize;

use crate::analysis::claims::{estimate_claim, ClaimId, ClaimParams};
use crate::analysis::experiment::{check_assertions, run_experiment, write_report_csv, write_report_dat, Design};
use crate::analysis::oracle::{brute_force_optimum, held_karp, OracleResult};
use crate::error::{Error, Result};
use crate::generation::Scheme;
use crate::instance::{make_g1, make_grid, make_grid_with_interior, Instance, InstanceKind};
use crate::optimizer::{read_trace_csv, run, write_trace_csv, CeConfig};
use crate::tour::Tour;

#[derive(Debug, Parser)]
#[command(name = "cetsp", version, about = "Cross-Entropy / Max-Min Ant System TSP optimizer and experiment harness")]
pub struct Cli {
    /// Worker threads for parallel sampling and trials.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate an instance file.
    Gen(GenArgs),
    /// Run the optimizer and write a trace CSV and summary JSON.
    Solve(SolveArgs),
    /// Solve an instance exactly.
    Oracle(OracleArgs),
    /// Monte Carlo check of one sampling-probability bound.
    Claims(ClaimsArgs),
    /// Run an experiment design.
    Experiment(ExperimentArgs),
    /// Turn a trace CSV into gnuplot data files.
    TracePlot(TracePlotArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyArg {
    G1,
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum SchemeArg {
    Vertex,
    Edge,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Scheme {
        match s {
            SchemeArg::Vertex => Scheme::VertexBased,
            SchemeArg::Edge => Scheme::EdgeBased,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodArg {
    HeldKarp,
    BruteForce,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub family: FamilyArg,
    #[arg(long)]
    pub n: usize,
    /// Grid side (grid only; defaults to 2n).
    #[arg(long)]
    pub m: Option<i64>,
    /// Exact number of interior vertices (grid only).
    #[arg(long)]
    pub interior: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long, value_enum, default_value = "edge")]
    pub scheme: SchemeArg,
    /// Sample size per iteration.
    #[arg(long = "N", default_value_t = 16)]
    pub sample_size: usize,
    /// Elite size.
    #[arg(long = "M", default_value_t = 1)]
    pub elite_size: usize,
    #[arg(long, default_value_t = 1.0)]
    pub rho: f64,
    /// Iteration budget; defaults depend on family and scheme.
    #[arg(long)]
    pub iters: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Stop once an iteration-best tour reaches this cost.
    #[arg(long)]
    pub target: Option<f64>,
    /// Use the exact optimum as target and reference tour (n <= 22).
    #[arg(long)]
    pub oracle_target: bool,
    /// Record per-iteration wall time (makes traces non-reproducible).
    #[arg(long)]
    pub timing: bool,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long, value_enum, default_value = "held-karp")]
    pub method: MethodArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClaimsArgs {
    #[arg(long)]
    pub claim: ClaimId,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub trials: u64,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Defaults to vertex for C1 and C2, edge otherwise.
    #[arg(long, value_enum)]
    pub scheme: Option<SchemeArg>,
    /// Exchange order for C1 and C4.
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    /// Order cut-off exponent for C6.
    #[arg(long, default_value_t = 0.5)]
    pub delta: f64,
    /// Exit with code 3 unless the check passes.
    #[arg(long)]
    pub assert: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub design: PathBuf,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Exit with code 3 if any frozen criterion fails.
    #[arg(long)]
    pub assert: bool,
}

#[derive(Debug, Args)]
pub struct TracePlotArgs {
    #[arg(long)]
    pub trace: PathBuf,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

enum Failure {
    Error(Error),
    Assert(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Error(e.into())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Error(e.into())
    }
}

type CliResult = std::result::Result<(), Failure>;

/// Parses `args` and runs the selected subcommand.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: cannot configure {t} threads: {e}");
            return ExitCode::from(1);
        }
    }
    let outcome = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Solve(a) => solve(a),
        Command::Oracle(a) => oracle(a),
        Command::Claims(a) => claims(a),
        Command::Experiment(a) => experiment(a),
        Command::TracePlot(a) => trace_plot(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Assert(msg)) => {
            eprintln!("assertion failed: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            match e {
                Error::Capacity(_) | Error::GenerationFailed { .. } => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = rand::rng().random();
        eprintln!("seed: {s}");
        s
    })
}

fn echo<T: Serialize>(config: &T) -> Result<()> {
    eprintln!("config: {}", serde_json::to_string(config)?);
    Ok(())
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

fn pretty<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

#[derive(Serialize)]
struct GenConfig {
    command: &'static str,
    family: FamilyArg,
    n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    m: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    interior: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

fn gen(a: GenArgs) -> CliResult {
    let instance = match a.family {
        FamilyArg::G1 => {
            echo(&GenConfig { command: "gen", family: a.family, n: a.n, m: None, interior: None, seed: None })?;
            make_g1(a.n)?
        }
        FamilyArg::Grid => {
            let m = a.m.unwrap_or(2 * a.n as i64);
            let seed = resolve_seed(a.seed);
            echo(&GenConfig {
                command: "gen",
                family: a.family,
                n: a.n,
                m: Some(m),
                interior: a.interior,
                seed: Some(seed),
            })?;
            match a.interior {
                Some(k) => make_grid_with_interior(a.n, m, k, seed)?.0,
                None => make_grid(a.n, m, seed)?.0,
            }
        }
    };
    let mut text = instance.to_json();
    text.push('\n');
    write_output(a.out.as_deref(), &text)?;
    Ok(())
}

/// Iteration budget used by `solve` when `--iters` is absent.
pub fn default_iterations(instance: &Instance, scheme: Scheme) -> u64 {
    let n = instance.n() as f64;
    match (instance.kind(), scheme) {
        (InstanceKind::Grid { m, .. }, _) => (n.powi(3) * (*m as f64).powi(5)).min(1e6) as u64,
        (_, Scheme::EdgeBased) => (n.powi(3) * n.ln()).ceil() as u64 * 4,
        (_, Scheme::VertexBased) => n.powi(6).min(u64::MAX as f64) as u64,
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct SolveSummary<'a> {
    config: &'a CeConfig,
    instance_hash: String,
    instance_kind: &'static str,
    n: usize,
    iterations: u64,
    hit_iteration: Option<u64>,
    total_evaluations: u64,
    best_cost: f64,
    best_tour: &'a Tour,
    last_tour: &'a Tour,
}

fn solve(a: SolveArgs) -> CliResult {
    let instance = Instance::load(&a.instance)?;
    let scheme: Scheme = a.scheme.into();
    let (optimum, target) = if a.oracle_target {
        let r = held_karp(&instance)?;
        (Some(r.optimal_tour), Some(r.optimal_cost))
    } else {
        let known = instance.known_optimum();
        let target = known.as_ref().map(|t| instance.cost(t)).transpose()?;
        (known, target)
    };
    let config = CeConfig {
        sample_size: a.sample_size,
        elite_size: a.elite_size,
        rho: a.rho,
        bounds: Some(crate::pheromone::Bounds::for_n(instance.n())),
        scheme,
        max_iterations: a.iters.unwrap_or_else(|| default_iterations(&instance, scheme)),
        target_cost: a.target.or(target),
        seed: resolve_seed(a.seed),
        record_wall_time: a.timing,
    };
    echo(&config)?;
    let trace = run(&instance, &config, optimum.as_ref())?;
    fs::create_dir_all(&a.out_dir)?;
    let mut csv = Vec::new();
    write_trace_csv(&trace.records, &mut csv)?;
    fs::write(a.out_dir.join("trace.csv"), csv)?;
    let s = &trace.summary;
    let summary = SolveSummary {
        config: &config,
        instance_hash: instance.content_hash(),
        instance_kind: instance.kind_name(),
        n: instance.n(),
        iterations: s.iterations,
        hit_iteration: s.hit_iteration,
        total_evaluations: s.total_evaluations,
        best_cost: s.best_cost,
        best_tour: &s.best_tour,
        last_tour: &s.last_tour,
    };
    fs::write(a.out_dir.join("summary.json"), pretty(&summary)?)?;
    println!(
        "iterations={} hit={} evaluations={} best_cost={}",
        s.iterations,
        s.hit_iteration.map_or("none".to_string(), |h| h.to_string()),
        s.total_evaluations,
        s.best_cost
    );
    Ok(())
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct OracleOutput<'a> {
    config: OracleConfig,
    instance_hash: String,
    #[serde(flatten)]
    result: &'a OracleResult,
}

#[derive(Serialize)]
struct OracleConfig {
    command: &'static str,
    method: MethodArg,
}

fn oracle(a: OracleArgs) -> CliResult {
    let instance = Instance::load(&a.instance)?;
    let config = OracleConfig { command: "oracle", method: a.method };
    echo(&config)?;
    let result = match a.method {
        MethodArg::HeldKarp => held_karp(&instance)?,
        MethodArg::BruteForce => brute_force_optimum(&instance)?,
    };
    let out = OracleOutput { config, instance_hash: instance.content_hash(), result: &result };
    write_output(a.out.as_deref(), &pretty(&out)?)?;
    Ok(())
}

#[derive(Serialize)]
struct ClaimsOutput<'a> {
    config: &'a ClaimParams,
    #[serde(flatten)]
    check: &'a crate::analysis::claims::BoundCheck,
}

fn claims(a: ClaimsArgs) -> CliResult {
    let mut params = ClaimParams::new(a.claim, a.n, a.trials, resolve_seed(a.seed));
    if let Some(s) = a.scheme {
        params.scheme = s.into();
    }
    params.k = a.k;
    params.delta = a.delta;
    echo(&params)?;
    let check = estimate_claim(&params)?;
    write_output(a.out.as_deref(), &pretty(&ClaimsOutput { config: &params, check: &check })?)?;
    if a.assert && !check.passed() {
        return Err(Failure::Assert(format!(
            "{} verdict {:?}: CI [{}, {}] vs threshold {}",
            check.claim, check.verdict, check.ci_low, check.ci_high, check.threshold
        )));
    }
    Ok(())
}

fn experiment(a: ExperimentArgs) -> CliResult {
    let design = Design::from_json(&fs::read_to_string(&a.design)?)?;
    echo(&design)?;
    let report = run_experiment(&design)?;
    fs::create_dir_all(&a.out_dir)?;
    fs::write(a.out_dir.join("report.json"), pretty(&report)?)?;
    let mut csv = Vec::new();
    write_report_csv(&report, &mut csv)?;
    fs::write(a.out_dir.join("report.csv"), csv)?;
    let mut dat = Vec::new();
    write_report_dat(&report, &mut dat)?;
    fs::write(a.out_dir.join("report.dat"), dat)?;
    for c in &report.cells {
        println!(
            "cell={} n={} N={} budget={} success={}/{}",
            c.cell, c.n, c.sample_size, c.budget, c.successes, c.trials
        );
    }
    if a.assert {
        let failed: Vec<String> = check_assertions(&report)
            .into_iter()
            .filter(|o| !o.pass)
            .map(|o| format!("cell {} {}: {} vs {}", o.cell, o.criterion, o.observed, o.threshold))
            .collect();
        if !failed.is_empty() {
            return Err(Failure::Assert(failed.join("; ")));
        }
    }
    Ok(())
}

fn trace_plot(a: TracePlotArgs) -> CliResult {
    eprintln!("config: {}", serde_json::json!({"command": "trace-plot", "trace": a.trace}));
    let records = read_trace_csv(fs::File::open(&a.trace)?)?;
    fs::create_dir_all(&a.out_dir)?;
    let mut best = String::from("# t best_so_far\n");
    let mut shared = String::from("# t shared_edges\n");
    for r in &records {
        best.push_str(&format!("{} {}\n", r.t, r.best_so_far));
        if let Some(s) = r.shared_edges {
            shared.push_str(&format!("{} {}\n", r.t, s));
        }
    }
    fs::write(a.out_dir.join("best_so_far.dat"), best)?;
    fs::write(a.out_dir.join("shared_edges.dat"), shared)?;
    Ok(())
}
