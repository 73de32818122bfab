use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn danm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_danm")).args(args).output().expect("spawn danm")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn read(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn four_sources(n: usize) -> Value {
    json!({
        "n_x": n, "n_y": n, "seed": 9,
        "sources": [
            {"f_x": 0.05, "f_y": 0.62, "amp_re": 1.0, "amp_im": 0.0},
            {"f_x": 0.30, "f_y": 0.12, "amp_re": 0.0, "amp_im": 1.5},
            {"f_x": 0.55, "f_y": 0.87, "amp_re": -1.2, "amp_im": 0.4},
            {"f_x": 0.80, "f_y": 0.37, "amp_re": 0.7, "amp_im": -0.9}
        ]
    })
}

/// Runs simulate then estimate; returns (snapshot, result, estimate output).
fn pipeline(dir: &Path, scenario: &Value, extra: &[&str]) -> (PathBuf, PathBuf, Output) {
    let sc = write(dir, "scenario.json", scenario);
    let snap = dir.join("snap.json");
    let o = danm(&["simulate", s(&sc), "--out", s(&snap)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let res = dir.join("result.json");
    let mut args = vec!["estimate", s(&snap), "--out", s(&res)];
    args.extend_from_slice(extra);
    let o = danm(&args);
    (snap, res, o)
}

fn max_error(result: &Value, truth: &Value) -> f64 {
    let pairs = result["payload"]["pairs"].as_array().unwrap();
    let truth = truth["sources"].as_array().unwrap();
    assert_eq!(pairs.len(), truth.len());
    let wrap = |a: f64, b: f64| {
        let d = (a - b).rem_euclid(1.0);
        d.min(1.0 - d)
    };
    truth
        .iter()
        .map(|t| {
            let (tx, ty) = (t["f_x"].as_f64().unwrap(), t["f_y"].as_f64().unwrap());
            pairs
                .iter()
                .map(|p| wrap(p["f_x"].as_f64().unwrap(), tx).max(wrap(p["f_y"].as_f64().unwrap(), ty)))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

#[test]
fn single_source_round_trip() {
    let dir = TempDir::new().unwrap();
    let sc = json!({"n_x": 4, "n_y": 5, "seed": 1,
        "sources": [{"f_x": 0.1, "f_y": 0.7, "amp_re": 1.0, "amp_im": 0.0}]});
    let (snap, res, o) = pipeline(dir.path(), &sc, &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = read(&res);
    assert_eq!(r["meta"]["kind"], "estimate");
    assert_eq!(r["payload"]["order"], 1);
    assert!(max_error(&r, &sc) < 1e-6);
    let amp = &r["payload"]["pairs"][0];
    assert!((amp["amp_re"].as_f64().unwrap() - 1.0).abs() < 1e-3);
    assert!(amp["amp_im"].as_f64().unwrap().abs() < 1e-3);

    let cert = dir.path().join("cert.json");
    let o = danm(&["certify", s(&snap), s(&res), "--out", s(&cert)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(read(&cert)["payload"]["passed"], true);
}

#[test]
fn missing_field_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    let sc = write(dir.path(), "bad.json", &json!({"n_x": 4, "n_y": 4, "seed": 0,
        "sources": [{"f_x": 0.1, "amp_re": 1.0, "amp_im": 0.0}]}));
    let o = danm(&["simulate", s(&sc)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("f_y"), "{}", stderr(&o));
}

#[test]
fn mask_shape_must_match() {
    let dir = TempDir::new().unwrap();
    let sc = write(dir.path(), "mask.json", &json!({"n_x": 3, "n_y": 3, "seed": 0,
        "mask": [[true, true], [true, true], [true, true]],
        "sources": [{"f_x": 0.1, "f_y": 0.2, "amp_re": 1.0, "amp_im": 0.0}]}));
    let o = danm(&["simulate", s(&sc)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("shape"), "{}", stderr(&o));
}

#[test]
fn order_beyond_capacity_is_rejected() {
    let dir = TempDir::new().unwrap();
    let sc = json!({"n_x": 4, "n_y": 4, "seed": 0,
        "sources": [{"f_x": 0.1, "f_y": 0.2, "amp_re": 1.0, "amp_im": 0.0}]});
    let (_, _, o) = pipeline(dir.path(), &sc, &["--order", "4"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("capacity"), "{}", stderr(&o));
}

#[test]
fn missing_snapshot_is_a_missing_artifact() {
    let o = danm(&["estimate", "/nonexistent/snap.json"]);
    assert_eq!(code(&o), 4);
    let o = danm(&["simulate", "/nonexistent/scenario.json"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn tampered_result_fails_integrity() {
    let dir = TempDir::new().unwrap();
    let (snap, res, o) = pipeline(dir.path(), &four_sources(8), &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let mut v = read(&res);
    v["payload"]["objective"] = json!(123.0);
    std::fs::write(&res, serde_json::to_string(&v).unwrap()).unwrap();
    let o = danm(&["certify", s(&snap), s(&res)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("integrity"), "{}", stderr(&o));
}

#[test]
fn unconverged_solve_writes_record_then_refuses_certificate() {
    let dir = TempDir::new().unwrap();
    let (snap, res, o) = pipeline(dir.path(), &four_sources(8), &["--max-iters", "3"]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    let r = read(&res);
    assert_eq!(r["payload"]["converged"], false);
    assert!(r["payload"]["dual_certificate"].is_null());
    let o = danm(&["certify", s(&snap), s(&res)]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
}

#[test]
fn vectorized_result_has_no_certificate() {
    let dir = TempDir::new().unwrap();
    let sc = four_sources(6);
    let (snap, res, o) = pipeline(dir.path(), &sc, &["--method", "vectorized"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = read(&res);
    assert_eq!(r["payload"]["method"], "vectorized");
    assert!(max_error(&r, &sc) < 1e-3, "{}", max_error(&r, &sc));
    let o = danm(&["certify", s(&snap), s(&res)]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
}

#[test]
fn noise_free_four_sources_recovered_and_certified() {
    let dir = TempDir::new().unwrap();
    let sc = four_sources(16);
    let (snap, res, o) = pipeline(dir.path(), &sc, &["--tol", "1e-8", "--certify"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = read(&res);
    assert!(max_error(&r, &sc) < 1e-4, "{}", max_error(&r, &sc));
    assert_eq!(r["payload"]["certificate"]["passed"], true);
    let o = danm(&["certify", s(&snap), s(&res), "--grid", "256"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let c: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(c["payload"]["passed"], true);
    assert_eq!(c["payload"]["grid_density"], json!([256, 256]));
}

#[test]
fn certify_rejects_foreign_snapshot() {
    let dir = TempDir::new().unwrap();
    let (_, res, o) = pipeline(dir.path(), &four_sources(8), &[]);
    assert_eq!(code(&o), 0);
    let other = write(dir.path(), "other.json", &json!({"n_x": 8, "n_y": 8, "seed": 2,
        "sources": [{"f_x": 0.1, "f_y": 0.2, "amp_re": 1.0, "amp_im": 0.0}]}));
    let snap2 = dir.path().join("snap2.json");
    assert_eq!(code(&danm(&["simulate", s(&other), "--out", s(&snap2)])), 0);
    let o = danm(&["certify", s(&snap2), s(&res)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("digest"), "{}", stderr(&o));
}

#[test]
fn plot_rejects_unknown_table() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("x.csv");
    std::fs::write(&p, "a,b\n1,2\n").unwrap();
    let o = danm(&["plot", s(&p)]);
    assert_eq!(code(&o), 2);
}
