use std::path::Path;
use std::process::{Command, Output};

use cetsp::analysis::oracle::held_karp;
use cetsp::optimizer::{read_trace_csv, TRACE_HEADER};
use cetsp::Instance;
use serde_json::Value;

fn cetsp(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cetsp")).args(args).current_dir(dir).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn usage_errors_and_help() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&cetsp(dir.path(), &["--help"])), 0);
    assert_eq!(code(&cetsp(dir.path(), &["frobnicate"])), 1);
    assert_eq!(code(&cetsp(dir.path(), &["gen", "--family", "g1"])), 1);
}

#[test]
fn gen_writes_loadable_instances() {
    let dir = tempfile::tempdir().unwrap();
    let out = cetsp(dir.path(), &["gen", "--family", "g1", "--n", "7"]);
    assert_eq!(code(&out), 0);
    let g1 = Instance::from_json(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(g1.n(), 7);

    let out = cetsp(
        dir.path(),
        &["gen", "--family", "grid", "--n", "9", "--interior", "2", "--seed", "4", "--out", "g.json"],
    );
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stderr).contains("config:"));
    let grid = Instance::load(dir.path().join("g.json")).unwrap();
    let meta = grid.grid_meta().unwrap();
    assert_eq!((grid.n(), meta.m, meta.interior_count), (9, 18, 2));
}

#[test]
fn generation_and_capacity_failures_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    // At most 2(m+1) lattice points of an m-grid avoid collinear triples.
    let out = cetsp(dir.path(), &["gen", "--family", "grid", "--n", "24", "--m", "12", "--seed", "1"]);
    assert_eq!(code(&out), 2);
    assert_eq!(code(&cetsp(dir.path(), &["gen", "--family", "g1", "--n", "23", "--out", "big.json"])), 0);
    assert_eq!(code(&cetsp(dir.path(), &["oracle", "--instance", "big.json"])), 2);
    assert_eq!(code(&cetsp(dir.path(), &["oracle", "--instance", "big.json", "--method", "brute-force"])), 2);
}

#[test]
fn solve_writes_trace_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&cetsp(d, &["gen", "--family", "grid", "--n", "9", "--seed", "2", "--out", "i.json"])), 0);
    let out = cetsp(
        d,
        &[
            "solve",
            "--instance",
            "i.json",
            "--N",
            "12",
            "--iters",
            "500",
            "--seed",
            "3",
            "--oracle-target",
            "--out-dir",
            "run",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let inst = Instance::load(d.join("i.json")).unwrap();
    let summary = json(&d.join("run/summary.json"));
    assert_eq!(summary["instanceHash"], inst.content_hash());
    assert_eq!(summary["config"]["seed"], 3);
    let optimum = held_karp(&inst).unwrap();
    assert!((summary["bestCost"].as_f64().unwrap() - optimum.optimal_cost).abs() < 1e-9);

    let text = std::fs::read_to_string(d.join("run/trace.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), TRACE_HEADER.join(","));
    let records = read_trace_csv(text.as_bytes()).unwrap();
    assert_eq!(records.len() as u64, summary["iterations"].as_u64().unwrap());
    assert_eq!(summary["totalEvaluations"].as_u64().unwrap(), 12 * records.len() as u64);
    assert!(records.iter().all(|r| r.wall_nanos == 0));

    assert_eq!(code(&cetsp(d, &["trace-plot", "--trace", "run/trace.csv", "--out-dir", "plot"])), 0);
    let best = std::fs::read_to_string(d.join("plot/best_so_far.dat")).unwrap();
    assert_eq!(best.lines().filter(|l| !l.starts_with('#')).count(), records.len());
    assert!(d.join("plot/shared_edges.dat").exists());
}

#[test]
fn solve_without_seed_reports_the_seed_it_drew() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&cetsp(d, &["gen", "--family", "g1", "--n", "8", "--out", "g.json"])), 0);
    let out = cetsp(d, &["solve", "--instance", "g.json", "--iters", "20", "--out-dir", "a"]);
    assert_eq!(code(&out), 0);
    let stderr = String::from_utf8(out.stderr).unwrap();
    let seed: u64 = stderr.lines().find_map(|l| l.strip_prefix("seed: ")).expect("seed line").parse().unwrap();
    let again =
        cetsp(d, &["solve", "--instance", "g.json", "--iters", "20", "--seed", &seed.to_string(), "--out-dir", "b"]);
    assert_eq!(code(&again), 0);
    assert_eq!(std::fs::read(d.join("a/trace.csv")).unwrap(), std::fs::read(d.join("b/trace.csv")).unwrap());
}

#[test]
fn invalid_solver_arguments_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&cetsp(d, &["gen", "--family", "g1", "--n", "8", "--out", "g.json"])), 0);
    assert_eq!(code(&cetsp(d, &["solve", "--instance", "g.json", "--N", "0", "--seed", "1"])), 1);
    assert_eq!(code(&cetsp(d, &["solve", "--instance", "g.json", "--N", "2", "--M", "3", "--seed", "1"])), 1);
    assert_eq!(code(&cetsp(d, &["solve", "--instance", "missing.json", "--seed", "1"])), 1);
}

#[test]
fn oracle_methods_agree() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&cetsp(d, &["gen", "--family", "grid", "--n", "8", "--seed", "9", "--out", "i.json"])), 0);
    assert_eq!(code(&cetsp(d, &["oracle", "--instance", "i.json", "--out", "hk.json"])), 0);
    assert_eq!(code(&cetsp(d, &["oracle", "--instance", "i.json", "--method", "brute-force", "--out", "bf.json"])), 0);
    let (hk, bf) = (json(&d.join("hk.json")), json(&d.join("bf.json")));
    assert_eq!(hk["optimalTour"], bf["optimalTour"]);
    assert_eq!(hk["method"], "held-karp");
    assert_eq!(bf["method"], "brute-force");
}

#[test]
fn claims_assert_fails_on_inconclusive_checks() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let pass = cetsp(
        d,
        &["claims", "--claim", "C2", "--n", "10", "--trials", "20000", "--seed", "1", "--assert", "--out", "c2.json"],
    );
    assert_eq!(code(&pass), 0);
    assert_eq!(json(&d.join("c2.json"))["verdict"], "pass");
    // Ten draws leave the interval straddling the threshold.
    let weak = cetsp(d, &["claims", "--claim", "C2", "--n", "10", "--trials", "10", "--seed", "1", "--assert"]);
    assert_eq!(code(&weak), 3);
    let outside = cetsp(d, &["claims", "--claim", "C5", "--n", "8", "--trials", "100", "--seed", "1"]);
    assert_eq!(code(&outside), 1);
}

#[test]
fn experiment_assert_reports_failed_criteria() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let design = r#"{"family":"g1","sweep":{"n":[8]},"nRule":"const:1","scheme":"edge","trials":3,
        "budgetRule":"const:1","masterSeed":1,"assert":{"minSuccessRate":1.0}}"#;
    std::fs::write(d.join("d.json"), design).unwrap();
    let out = cetsp(d, &["experiment", "--design", "d.json", "--out-dir", "r", "--assert"]);
    assert_eq!(code(&out), 3);
    for f in ["report.json", "report.csv", "report.dat"] {
        assert!(d.join("r").join(f).exists(), "{f}");
    }
    std::fs::write(d.join("bad.json"), r#"{"family":"g1"}"#).unwrap();
    assert_eq!(code(&cetsp(d, &["experiment", "--design", "bad.json"])), 1);
}
