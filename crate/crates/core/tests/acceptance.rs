//! Acceptance suite. Each criterion runs a bundled configuration from
//! `configs/acceptance/` and prints one PASS/FAIL line.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use relperturb::experiments::{self, ExperimentConfig, ExperimentResult};

fn config(name: &str) -> ExperimentConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/acceptance").join(name);
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    serde_json::from_str(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn describe(result: &ExperimentResult) -> String {
    result
        .checks
        .iter()
        .map(|c| format!("{}={:.4} ({}{})", c.name, c.value, c.region, if c.passed { "" } else { ", failed" }))
        .collect::<Vec<_>>()
        .join("; ")
}

/// Prints the verdict line and fails the test when a check or the time budget fails.
fn report(id: u32, title: &str, budget_secs: u64, elapsed: Duration, passed: bool, detail: String) {
    let in_time = elapsed <= Duration::from_secs(budget_secs);
    let verdict = if passed && in_time { "PASS" } else { "FAIL" };
    println!(
        "criterion {id:>2} {title}: {verdict} [{:.1}s of {budget_secs}s] {detail}",
        elapsed.as_secs_f64()
    );
    assert!(passed, "criterion {id} failed: {detail}");
    assert!(in_time, "criterion {id} exceeded its time budget");
}

fn run_criterion(id: u32, title: &str, file: &str, budget_secs: u64) -> ExperimentResult {
    let cfg = config(file);
    let start = Instant::now();
    let result = experiments::run(&cfg).unwrap_or_else(|e| panic!("criterion {id}: {e}"));
    let elapsed = start.elapsed();
    report(id, title, budget_secs, elapsed, result.passed(), describe(&result));
    result
}

#[test]
fn criterion_01_exactness() {
    run_criterion(1, "zero perturbation is reproduced exactly", "01-exactness.json", 5);
}

#[test]
fn criterion_02_residual_scaling() {
    let r = run_criterion(2, "residual slopes are quadratic and cubic", "02-residual-scaling.json", 30);
    assert_eq!(r.trials, 20);
}

#[test]
fn criterion_03_rank_one() {
    run_criterion(3, "rank-one perturbation has equal coefficients", "03-rank-one.json", 5);
}

#[test]
fn criterion_04_separation() {
    let r = run_criterion(4, "separation implication has no counterexample", "04-separation.json", 60);
    assert_eq!(r.trials, 10_000);
}

#[test]
fn criterion_05_contraction() {
    run_criterion(5, "contraction ratio stays below 6", "05-contraction.json", 30);
}

#[test]
fn criterion_06_concentration() {
    run_criterion(6, "bounds hold on the good event", "06-concentration.json", 600);
}

#[test]
fn criterion_07_event_rate() {
    run_criterion(7, "bad-event frequency shape", "07-event-probability.json", 600);
}

#[test]
fn criterion_08_anticoncentration() {
    run_criterion(8, "upward deviation keeps positive probability", "08-anticoncentration.json", 300);
}

#[test]
fn criterion_09_clt() {
    run_criterion(9, "top eigenvalue fluctuation is normal", "09-clt.json", 300);
}

#[test]
fn criterion_10_long_memory() {
    run_criterion(10, "long-memory errors share a common limit", "10-long-memory.json", 600);
}

#[test]
fn criterion_11_projector_risk() {
    run_criterion(11, "projector risk scales as j^2 / n", "11-projector-risk.json", 600);
}

#[test]
fn criterion_12_goe() {
    run_criterion(12, "repeated block follows the GOE edge", "12-goe-transfer.json", 600);
}

#[test]
fn criterion_13_fgn() {
    run_criterion(13, "fractional Gaussian noise matches its covariance", "13-fgn.json", 120);
}

fn bytes_at(cfg: &ExperimentConfig, threads: usize) -> Vec<u8> {
    let r = experiments::run_with_threads(cfg, threads).unwrap();
    serde_json::to_vec(&r).unwrap()
}

#[test]
fn criterion_14_determinism() {
    let mut configs = Vec::new();
    for (file, trials) in [
        ("04-separation.json", 2000),
        ("07-event-probability.json", 2000),
        ("10-long-memory.json", 50),
        ("12-goe-transfer.json", 200),
        ("13-fgn.json", 200),
    ] {
        let mut cfg = config(file);
        cfg.trials = trials;
        configs.push((file, cfg));
    }
    let start = Instant::now();
    let mut mismatched = Vec::new();
    for (file, cfg) in &configs {
        if bytes_at(cfg, 1) != bytes_at(cfg, 8) || bytes_at(cfg, 8) != bytes_at(cfg, 8) {
            mismatched.push(*file);
        }
    }
    report(
        14,
        "outputs identical at 1 and 8 threads",
        300,
        start.elapsed(),
        mismatched.is_empty(),
        format!("experiments={} mismatched={mismatched:?}", configs.len()),
    );
}
