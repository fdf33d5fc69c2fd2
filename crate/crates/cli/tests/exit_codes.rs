use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_splicebound")).args(args).output().unwrap()
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().unwrap()
}

fn stdout(args: &[&str]) -> String {
    String::from_utf8(run(args).stdout).unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

const BAD_SECTION: &str = r#"{
  "name": "too-high",
  "phi":   {"pieces": [{"domain": [0, 1], "kind": "power-sum", "terms": [[1, 2]]}]},
  "gamma": {"pieces": [{"domain": [0, 1], "kind": "power-sum", "terms": [[1, 1]]}]}
}"#;

#[test]
fn validate_exit_codes() {
    assert_eq!(code(&["validate", "--builtin", "example-1"]), 0);

    let tmp = tempfile::tempdir().unwrap();
    let bad = write_config(tmp.path(), "bad.json", BAD_SECTION);
    let out = run(&["validate", "--config", &bad]);
    assert_eq!(out.status.code(), Some(2));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("exceeds the upper bound"), "{text}");

    let broken = write_config(tmp.path(), "broken.json", "{ not json");
    assert_eq!(code(&["validate", "--config", &broken]), 3);
    assert_eq!(code(&["validate", "--builtin", "no-such-section"]), 3);
    assert_eq!(code(&["validate"]), 3);
    assert_eq!(code(&["validate", "--config", "/nonexistent/section.json"]), 5);
}

#[test]
fn usage_errors_exit_three() {
    assert_eq!(code(&["frobnicate"]), 3);
    assert_eq!(code(&["eval", "--builtin", "example-1", "--kind", "nope", "--x", "0.1", "--y", "0.1"]), 3);
    assert_eq!(code(&["grid", "--builtin", "example-1", "--kind", "pi", "--n", "1"]), 3);
    assert_eq!(code(&["check", "--builtin", "example-1", "--tol", "0"]), 3);
    assert_eq!(code(&["oracle", "--builtin", "example-1", "--n", "65"]), 3);
    assert_eq!(code(&["oracle", "--builtin", "example-1", "--n", "8", "--nodes", "3-4"]), 3);
    assert_eq!(code(&["--help"]), 0);
}

#[test]
fn eval_prints_values() {
    let splice = stdout(&["eval", "--builtin", "example-1", "--kind", "splice", "--x", "0.9", "--y", "0.64"]);
    assert!((splice.trim().parse::<f64>().unwrap() - 0.612).abs() < 1e-12);
    let k = stdout(&["eval", "--builtin", "example-1", "--kind", "k", "--x", "0.9", "--y", "0.64"]);
    assert!((k.trim().parse::<f64>().unwrap() - 0.6205).abs() < 1e-12);
    assert_eq!(stdout(&["eval", "--builtin", "example-2", "--kind", "m", "--x", "0.2", "--y", "0.7"]).trim(), "0.2");
    assert_eq!(code(&["eval", "--builtin", "example-1", "--kind", "c1", "--x", "1.5", "--y", "0.5"]), 4);
}

#[test]
fn grid_exports_csv() {
    let csv = stdout(&["grid", "--builtin", "example-1", "--kind", "c1", "--n", "3"]);
    assert!(csv.starts_with("x,y,value\n"));
    assert!(csv.lines().any(|l| l == "0.5,0.25,0.125"), "{csv}");

    let pi = stdout(&["grid", "--builtin", "example-1", "--kind", "pi", "--n", "2"]);
    let rows: Vec<&str> = pi.lines().skip(1).collect();
    for corner in ["0,0,0", "0,1,0", "1,0,0", "1,1,1"] {
        assert!(rows.contains(&corner), "{corner} missing");
    }
    for row in rows {
        let v: Vec<f64> = row.split(',').map(|s| s.parse().unwrap()).collect();
        assert!((v[0] * v[1] - v[2]).abs() < 1e-15);
    }

    assert_eq!(code(&["grid", "--builtin", "example-1", "--kind", "pi", "--n", "2", "--out", "/nonexistent/g.csv"]), 5);
}

#[test]
fn check_verdicts() {
    let out = run(&["check", "--builtin", "example-1", "--which", "copula"]);
    assert_eq!(out.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["copula"]["verdict"], "fail");
    assert_eq!(v["copula_grid"]["verdict"], "fail");

    assert_eq!(code(&["check", "--builtin", "example-1", "--which", "coincidence"]), 0);
    assert_eq!(code(&["check", "--builtin", "example-2", "--which", "copula"]), 0);
    assert_eq!(code(&["check", "--builtin", "diag-pi", "--which", "copula"]), 1);
    assert_eq!(code(&["check", "--builtin", "example-2", "--which", "phi-simple"]), 1);
}

#[test]
fn oracle_bands() {
    let out = run(&["oracle", "--builtin", "example-1", "--n", "16"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    for row in v["rows"].as_array().unwrap() {
        if row["on_curve"] == true {
            assert!(row["gap"].as_f64().unwrap().abs() <= 1e-9);
        }
    }
    assert_eq!(code(&["oracle", "--builtin", "example-1", "--n", "2"]), 0);

    let tmp = tempfile::tempdir().unwrap();
    let dump = tmp.path().join("lp");
    let dir = dump.to_string_lossy();
    assert_eq!(code(&["oracle", "--builtin", "example-1", "--n", "4", "--nodes", "2:1", "--dump", &dir]), 0);
    assert!(dump.join("lp-2-1.txt").exists());
}
