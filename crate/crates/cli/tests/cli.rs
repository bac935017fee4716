use std::path::Path;
use std::process::Command;

use cvis::Scheme;
use cvis_cli::config::{ExperimentConfig, ProblemKind, ProposalSpec};
use serde_json::Value;

fn cvis(out: &Path, args: &[&str]) -> String {
    let output = Command::new(env!("CARGO_BIN_EXE_cvis"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "cvis {args:?} failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    String::from_utf8(output.stdout).unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn allocate_writes_equal_cost_counts() {
    let dir = tempfile::tempdir().unwrap();
    cvis(dir.path(), &["allocate", "--problem", "beam", "--budget", "400000"]);
    let a = read_json(&dir.path().join("allocation.json"));
    assert_eq!(a["mfis"]["n_hf"], 400000);
    assert_eq!(a["cv"]["n_hf"], 366666);
    assert_eq!(a["acv"]["n_hf"], 293333);
    assert_eq!(a["acv"]["n_lf"], 1173332);
}

#[test]
fn theory_prints_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = cvis(dir.path(), &["theory", "--r2", "0.81", "--k", "10", "--k", "20", "--scheme", "cv"]);
    let preds: Value = serde_json::from_str(&stdout).unwrap();
    let first = preds[0]["ratio"].as_f64().unwrap();
    assert!((first - 0.19 * 8.0 / 7.0).abs() < 1e-12);
    assert_eq!(preds.as_array().unwrap().len(), 2);
    assert_eq!(read_json(&dir.path().join("theory.json")), preds);
}

#[test]
fn estimates_do_not_depend_on_runs_or_threads() {
    let args = ["estimate", "--replications", "12", "--budget", "1500", "--seed", "7"];
    let dirs: Vec<_> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    cvis(dirs[0].path(), &args);
    for (dir, threads) in [(&dirs[1], "3"), (&dirs[2], "1")] {
        let mut with_threads = vec!["--threads", threads];
        with_threads.extend_from_slice(&args);
        cvis(dir.path(), &with_threads);
    }
    let csv: Vec<Vec<u8>> = dirs
        .iter()
        .map(|d| std::fs::read(d.path().join("estimators.csv")).unwrap())
        .collect();
    assert_eq!(csv[0], csv[1]);
    assert_eq!(csv[0], csv[2]);
    let other = tempfile::tempdir().unwrap();
    cvis(other.path(), &["estimate", "--replications", "12", "--budget", "1500", "--seed", "8"]);
    assert_ne!(std::fs::read(other.path().join("estimators.csv")).unwrap(), csv[0]);
}

#[test]
fn validate_theorem2_writes_rows_per_k() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("t.toml");
    std::fs::write(&cfg, "replications = 50\n[theory]\nk_grid = [8, 12]\nr2 = 0.5\n").unwrap();
    cvis(dir.path(), &["validate-theorem2", "--config", cfg.to_str().unwrap()]);
    let rep = read_json(&dir.path().join("theorem2.json"));
    assert_eq!(rep["rows"].as_array().unwrap().len(), 2);
    assert_eq!(rep["replications"], 50);
}

#[test]
fn toml_and_json_configs_agree() {
    let dir = tempfile::tempdir().unwrap();
    let toml_path = dir.path().join("c.toml");
    let json_path = dir.path().join("c.json");
    std::fs::write(
        &toml_path,
        r#"
problem = "beam"
budget = 2000.0
seed = 11

[plan]
k = 50
scheme = "cv"

[targets]
pf_hf = 0.01

[proposal]
kind = "cross-entropy"
"#,
    )
    .unwrap();
    std::fs::write(
        &json_path,
        r#"{"problem": "beam", "budget": 2000.0, "seed": 11, "plan": {"k": 50, "scheme": "cv"},
            "targets": {"pf_hf": 0.01}, "proposal": {"kind": "cross-entropy"}}"#,
    )
    .unwrap();
    let a = ExperimentConfig::load(&toml_path).unwrap();
    let b = ExperimentConfig::load(&json_path).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.problem, ProblemKind::Beam);
    assert_eq!(a.plan.k, 50);
    assert_eq!(a.plan.scheme, Scheme::Cv);
    assert_eq!(a.targets.pf_hf, 0.01);
    assert_eq!(a.targets.pf_lf, 0.05);
    assert_eq!(a.em().n_s, 5000);
    assert_eq!(a.cost_ratio(), 11.0);
}

#[test]
fn invalid_configs_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"problem": "plate", "proposal": {"kind": "intermediate", "level": 2.0}}"#).unwrap();
    assert!(ExperimentConfig::load(&path).is_err());
    std::fs::write(&path, r#"{"budget": -1.0}"#).unwrap();
    assert!(ExperimentConfig::load(&path).is_err());
    std::fs::write(&path, r#"{"problem": "cube"}"#).unwrap();
    assert!(ExperimentConfig::load(&path).is_err());
    let cfg = ExperimentConfig {
        proposal: ProposalSpec::Intermediate { level: 1.6 },
        ..ExperimentConfig::for_problem(ProblemKind::Analytic)
    };
    assert!(cfg.validate().is_ok());
}

#[test]
fn missing_config_file_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let output = Command::new(env!("CARGO_BIN_EXE_cvis"))
        .arg("--out")
        .arg(dir.path())
        .args(["estimate", "--config", "/nonexistent/cfg.json"])
        .output()
        .unwrap();
    assert!(!output.status.success());
    assert!(String::from_utf8_lossy(&output.stderr).contains("nonexistent"));
}
