//! End-to-end runs of the `yamabe` binary.

use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn yamabe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_yamabe")).args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).expect("stderr is JSON")
}

const AUBIN: [&str; 7] = ["solve", "--family", "power:2", "--f", "power:1,5", "--a", "1"];

#[test]
fn solve_writes_reproducible_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str| {
        let out_dir = dir.path().join(sub);
        let out_s = out_dir.to_str().unwrap().to_string();
        let mut args = AUBIN.to_vec();
        args.extend(["--rmax", "10", "--svg", "--out", &out_s]);
        let out = yamabe(&args);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        out_dir
    };
    let a = run("a");
    let b = run("b");
    for name in ["trajectory.csv", "trajectory.svg"] {
        assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap(), "{name}");
    }
    let csv = std::fs::read_to_string(a.join("trajectory.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("r,w,wprime"));
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(a.join("solve.json")).unwrap()).unwrap();
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["command"], "solve");
    assert_eq!(doc["sigma"], 1.0);
    assert_eq!(doc["config"]["rmax"], 10.0);
    let result = &doc["result"];
    assert_eq!(result["termination"]["kind"], "ReachedEnd");
    assert_eq!(result["classification"]["observed_class"]["class"], "positive_monotone_decreasing_stable");
    let residual = result["pohozaev"]["max_residual"].as_f64().unwrap();
    assert!(residual <= 1e-6, "{residual}");
}

#[test]
fn solve_reports_blow_up() {
    let out = yamabe(&["solve", "--family", "power:1", "--f", "power:-1,3", "--a", "0.5", "--rmax", "50"]);
    assert!(out.status.success());
    let doc = stdout_json(&out);
    assert_eq!(doc["result"]["termination"]["kind"], "BlowUp");
    let exponent = doc["result"]["blowup"]["fit_exponent"].as_f64().unwrap();
    assert!((exponent - 1.0).abs() <= 0.15, "{exponent}");
}

#[test]
fn usage_errors_exit_two() {
    let missing = yamabe(&["solve", "--family", "power:1", "--f", "power:1,3"]);
    assert_eq!(missing.status.code(), Some(2));
    assert_eq!(stderr_json(&missing)["error"]["kind"], "usage");
    let suite = yamabe(&["verify", "nonsense"]);
    assert_eq!(suite.status.code(), Some(2));
    assert!(stderr_json(&suite)["error"]["message"].as_str().unwrap().contains("regimes"));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, "[solve]\nfamily = \"power:1\"\nf = \"power:1,3\"\na = 0.5\nrmax = 5.0\n").unwrap();
    let cfg = path.to_str().unwrap();
    let from_file = stdout_json(&yamabe(&["solve", "--config", cfg]));
    assert_eq!(from_file["config"]["a"], 0.5);
    assert_eq!(from_file["config"]["rmax"], 5.0);
    let overridden = stdout_json(&yamabe(&["solve", "--config", cfg, "--a", "-0.25", "--rmax", "3"]));
    assert_eq!(overridden["config"]["a"], -0.25);
    assert_eq!(overridden["config"]["rmax"], 3.0);
    assert_eq!(overridden["config"]["family"], "power:1");
}

#[test]
fn fast_suites_pass() {
    for suite in ["tables", "hypotheses"] {
        let out = yamabe(&["verify", suite]);
        assert_eq!(out.status.code(), Some(0), "{suite}");
        assert_eq!(stdout_json(&out)["result"]["passed"], true, "{suite}");
    }
}

const MODEL: [&str; 10] = ["--ell", "1", "--m", "4", "--n1", "0", "--n2", "0", "--p", "2"];

#[test]
fn shoot_below_first_eigenvalue_is_constant_only() {
    let mut args = vec!["shoot"];
    args.extend(MODEL);
    args.extend(["--lambda", "1"]);
    let out = yamabe(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout_json(&out)["result"]["constant_only"], true);
}

#[test]
fn shoot_above_gate_fails() {
    let out = yamabe(&["shoot", "--ell", "1", "--m", "4", "--n1", "0", "--n2", "0", "--p", "4", "--lambda", "40"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"]["kind"], "gate");
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn glue_two_nodal() {
    let dir = tempfile::tempdir().unwrap();
    let out_s = dir.path().to_str().unwrap();
    let mut args = vec!["glue"];
    args.extend(MODEL);
    args.extend(["--lambda", "40", "--k", "2", "--out", out_s]);
    let out = yamabe(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = stdout_json(&out);
    let glued = &doc["result"];
    assert_eq!(glued["case"], "P2.2");
    assert_eq!(glued["far_end_sign_right"], 1.0);
    assert_eq!(glued["far_end_sign_left"], 1.0);
    assert!(read(dir.path(), "glued.svg").contains(">R+<"));
}
