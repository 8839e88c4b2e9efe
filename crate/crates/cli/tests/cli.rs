use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use relperturb::SpectrumModel;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_relperturb"));
    c.env_remove("RELPERTURB_THREADS");
    c
}

fn repo(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect()
}

#[test]
fn rank_two_point_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "s.json", r#"{"eigenvalues":[3,1]}"#);
    let o = bin().args(["rank", "--config"]).arg(&s).args(["--index", "1"]).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 1);
    // r = 1/(3-1) + 3/2 = 2, x* = 1/6
    assert_eq!(rows[0][0], "1");
    assert!((rows[0][5].parse::<f64>().unwrap() - 2.0).abs() < 1e-12);
    assert!((rows[0][7].parse::<f64>().unwrap() - 1.0 / 6.0).abs() < 1e-12);
}

#[test]
fn rank_single_eigenvalue_has_no_gap() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "s.json", r#"{"eigenvalues":[2.5]}"#);
    let o = bin().args(["rank", "--config"]).arg(&s).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows[0][5], "no gap");
}

#[test]
fn rank_matches_library() {
    let path = repo("configs/examples/spectrum.json");
    let o = bin().args(["rank", "--all", "--format", "json", "--config"]).arg(&path).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let model = SpectrumModel::diagonal(vec![4.0, 2.0, 1.0], 1e-12).unwrap();
    for j in 0..3 {
        let got = doc["rows"][j]["rel_rank"].as_f64().unwrap();
        assert!((got - model.relative_rank(j).unwrap()).abs() < 1e-12);
    }
    assert_eq!(doc["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn bad_spectrum_file_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "s.json", r#"{"eigenvalues":[1, -2]}"#);
    let o = bin().args(["rank", "--config"]).arg(&s).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = bin().args(["rank", "--config", "/nonexistent.json"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = bin().arg("frobnicate").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn expand_reports_every_target() {
    let o = bin()
        .args(["expand", "--format", "json", "--config"])
        .arg(repo("configs/examples/spectrum.json"))
        .arg("--perturbation")
        .arg(repo("configs/examples/perturbation.json"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    // two per simple index, two per block
    assert_eq!(doc["reports"].as_array().unwrap().len(), 12);
    let o = bin()
        .args(["expand", "--target", "eigenvalue:2", "--config"])
        .arg(repo("configs/examples/spectrum.json"))
        .arg("--perturbation")
        .arg(repo("configs/examples/perturbation.json"))
        .output()
        .unwrap();
    assert_eq!(csv_rows(&stdout(&o)).len(), 1);
}

#[test]
fn separate_prints_both_premises() {
    let o = bin()
        .args(["separate", "--index", "2", "--offset", "0.1", "--config"])
        .arg(repo("configs/examples/spectrum.json"))
        .arg("--perturbation")
        .arg(repo("configs/examples/perturbation.json"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows[0][4], "true");
    assert!(rows[0][6].parse::<f64>().unwrap().abs() <= 0.1);
}

#[test]
fn simulate_writes_n_rows_with_seed() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["simulate", "--seed", "42", "--config"])
        .arg(repo("configs/examples/generator.json"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&std::fs::read_to_string(dir.path().join("simulate.csv")).unwrap());
    assert_eq!(rows.len(), 200);
    assert!(rows.iter().all(|r| r.last().unwrap() == "42"));
}

fn experiment_files(cfg: &Path, extra: &[&str], env_threads: Option<&str>) -> (Option<i32>, tempfile::TempDir) {
    let dir = tempfile::tempdir().unwrap();
    let mut c = bin();
    c.args(["experiment", "--config"]).arg(cfg).arg("--out").arg(dir.path()).args(extra);
    if let Some(t) = env_threads {
        c.env("RELPERTURB_THREADS", t);
    }
    let o = c.output().unwrap();
    (o.status.code(), dir)
}

#[test]
fn bundled_config_passes() {
    let (code, dir) = experiment_files(&repo("configs/acceptance/05-contraction.json"), &["--format", "svg"], None);
    assert_eq!(code, Some(0));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("contraction.json")).unwrap()).unwrap();
    assert_eq!(json["seed"], 5);
    assert_eq!(json["config_sha256"].as_str().unwrap().len(), 64);
    assert!(dir.path().join("contraction.csv").exists());
}

#[test]
fn empty_grid_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"kind":"clt","trials":10,"sampling":{"model":{"type":"explicit","eigenvalues":[2,1]}},"ns":[]}"#,
    );
    let (code, _) = experiment_files(&cfg, &[], None);
    assert_eq!(code, Some(2));
}

#[test]
fn impossible_threshold_fails_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"kind":"contraction","seed":1,"trials":50,"bound":1e-9}"#);
    let (code, out) = experiment_files(&cfg, &[], None);
    assert_eq!(code, Some(1));
    let result = out.path().join("contraction.json");
    let o = bin().args(["report", "--config"]).arg(&result).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn report_round_trip() {
    let (code, dir) = experiment_files(&repo("configs/examples/quick-projector-risk.json"), &["--trials", "50"], None);
    assert_eq!(code, Some(0));
    let result = dir.path().join("projector_risk.json");
    let o = bin().args(["report", "--format", "svg", "--config"]).arg(&result).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("<svg"));
}

#[test]
fn output_files_do_not_depend_on_threads() {
    let cfg = repo("configs/examples/quick-projector-risk.json");
    let (a, one) = experiment_files(&cfg, &["--threads", "1", "--trials", "100"], None);
    let (b, eight) = experiment_files(&cfg, &["--trials", "100"], Some("8"));
    assert_eq!((a, b), (Some(0), Some(0)));
    for f in ["projector_risk.csv", "projector_risk.json"] {
        assert_eq!(std::fs::read(one.path().join(f)).unwrap(), std::fs::read(eight.path().join(f)).unwrap(), "{f}");
    }
}
