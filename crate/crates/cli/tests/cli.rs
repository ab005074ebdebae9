use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const HOMOGENEOUS_MODEL: &str = r#"{
    "n": 4,
    "gram": [[0, 1], [1, 0]],
    "A": [[0, 1], [0, 0]],
    "f": { "kind": "homogeneous", "params": { "c": 0.3 } },
    "interval": [0, null]
}"#;

fn scenario(dir: &TempDir, tasks: &str, extra: &str) -> PathBuf {
    let path = dir.path().join("scenario.json");
    let text = format!(r#"{{ "schema_version": 1, "model": {HOMOGENEOUS_MODEL}, "tasks": {tasks}{extra} }}"#);
    std::fs::write(&path, text).unwrap();
    path
}

fn ecs_lab(args: &[&str], tol_scale: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ecs-lab"));
    cmd.args(args).env_remove("ECS_LAB_TOL_SCALE");
    if let Some(s) = tol_scale {
        cmd.env("ECS_LAB_TOL_SCALE", s);
    }
    cmd.output().unwrap()
}

fn run_to(scenario: &Path, report: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["--scenario", scenario.to_str().unwrap(), "--report", report.to_str().unwrap()];
    args.extend_from_slice(extra);
    ecs_lab(&args, None)
}

fn read(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn verify_model_passes() {
    let dir = TempDir::new().unwrap();
    let s = scenario(&dir, r#"[{"task": "verify-model", "points": 10, "isometries": 2}]"#, "");
    let report = dir.path().join("r.json");
    let out = run_to(&s, &report, &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = read(&report);
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["summary"]["failed"], 0);
    let checks = r["tasks"][0]["checks"].as_array().unwrap();
    assert!(checks.len() >= 10);
    for c in checks {
        assert!(!c["paper_anchor"].as_str().unwrap().is_empty());
        assert_eq!(c["pass"], c["residual"].as_f64().unwrap() <= c["tolerance"].as_f64().unwrap());
    }
}

#[test]
fn nonpositive_q_is_a_precondition_error() {
    let dir = TempDir::new().unwrap();
    let s = scenario(&dir, r#"[{"task": "classify-group", "generators": [{"q": 1.0}, {"q": -2.0}]}]"#, "");
    let out = run_to(&s, &dir.path().join("r.json"), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("q = -2"));
}

#[test]
fn empty_task_list() {
    let dir = TempDir::new().unwrap();
    let s = scenario(&dir, "[]", "");
    let report = dir.path().join("r.json");
    assert_eq!(run_to(&s, &report, &[]).status.code(), Some(0));
    let r = read(&report);
    assert_eq!(r["tasks"].as_array().unwrap().len(), 0);
    assert_eq!(r["summary"]["checks"], 0);
}

#[test]
fn parse_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    assert_eq!(run_to(&bad, &dir.path().join("r.json"), &[]).status.code(), Some(2));
    let unknown = scenario(&dir, r#"["frobnicate"]"#, "");
    assert_eq!(run_to(&unknown, &dir.path().join("r.json"), &[]).status.code(), Some(2));
    let missing = dir.path().join("missing.json");
    assert_eq!(run_to(&missing, &dir.path().join("r.json"), &[]).status.code(), Some(2));
}

#[test]
fn failing_check_exits_1_and_scale_relaxes_it() {
    let dir = TempDir::new().unwrap();
    let s = scenario(&dir, r#"[{"task": "isometry-check", "elements": 2, "points": 2}]"#, r#", "tolerances": {"inverse_law": 1e-30}"#);
    let report = dir.path().join("r.json");
    let args = ["--scenario", s.to_str().unwrap(), "--report", report.to_str().unwrap()];
    let out = ecs_lab(&args, None);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("inverse_law"));
    let r = read(&report);
    let c = r["tasks"][0]["checks"].as_array().unwrap().iter().find(|c| c["name"] == "inverse_law").unwrap().clone();
    assert_eq!(c["tolerance"], 1e-30);
    assert_eq!(c["pass"], false);

    assert_eq!(ecs_lab(&args, Some("1e30")).status.code(), Some(0));
    assert_eq!(ecs_lab(&args, Some("-1")).status.code(), Some(2));
}

#[test]
fn same_seed_same_report_at_any_parallelism() {
    let dir = TempDir::new().unwrap();
    let tasks = r#"[{"task": "isometry-check", "elements": 2, "points": 2},
                    {"task": "geodesic", "count": 3, "samples": 5},
                    {"task": "tcp-check", "samples": 5, "pairs": 6, "triples": 4}]"#;
    let s = scenario(&dir, tasks, "");
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    assert_eq!(run_to(&s, &a, &["--seed", "5"]).status.code(), Some(0));
    assert_eq!(run_to(&s, &b, &["--seed", "5", "--parallel", "3"]).status.code(), Some(0));
    let (mut ra, mut rb) = (read(&a), read(&b));
    assert_eq!(ra["seed"], 5);
    ra.as_object_mut().unwrap().remove("environment");
    rb.as_object_mut().unwrap().remove("environment");
    assert_eq!(ra, rb);

    let c = dir.path().join("c.json");
    assert_eq!(run_to(&s, &c, &["--seed", "6"]).status.code(), Some(0));
    assert_ne!(read(&c)["tasks"][1]["data"], rb["tasks"][1]["data"]);
}

#[test]
fn csv_tables() {
    let dir = TempDir::new().unwrap();
    let s = scenario(&dir, r#"[{"task": "geodesic", "count": 4, "samples": 5}]"#, "");
    let csv = dir.path().join("csv");
    let out = run_to(&s, &dir.path().join("r.json"), &["--csv", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let checks = std::fs::read_to_string(csv.join("checks.csv")).unwrap();
    assert!(checks.starts_with("task,name,paper_anchor,residual,tolerance,pass"));
    assert!(checks.contains("geodesic,energy_drift"));
    let rows = std::fs::read_to_string(csv.join("00_geodesic.csv")).unwrap();
    assert_eq!(rows.lines().count(), 5);
}

#[test]
fn shipped_scenarios_pass() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let dir = TempDir::new().unwrap();
    for name in ["polynomial_n5.json", "imaginary_c_m3.json"] {
        let out = run_to(&root.join(name), &dir.path().join("r.json"), &["--parallel", "2"]);
        assert_eq!(out.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&out.stderr));
    }
}
