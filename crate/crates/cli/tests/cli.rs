use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_free-jacobi"))
        .args(args)
        .env("FREE_JACOBI_OUT_DIR", dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn manifest(path: &Path) -> Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

#[test]
fn closed_form_example_row() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &["moments", "--lambda", "1", "--theta", "0.5", "--t", "1", "--method", "closed-form", "--order", "4"],
    );
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.lines().any(|l| l == "1,1,0.6839397,closed-form"), "{out}");
    let csv = fs::read_to_string(dir.path().join("moments.csv")).unwrap();
    assert_eq!(csv, out);
}

#[test]
fn invalid_geometry_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["moments", "--lambda", "2", "--init", "p-le-q"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(dir.path(), &["moments", "--lambda", "0.5", "--method", "closed-form"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(dir.path(), &["moments", "--method", "no-such-method"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(dir.path(), &["no-such-command"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!dir.path().join("moments.csv").exists());
}

#[test]
fn catalan_suite_reports_exact_count() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["verify", "--suite", "catalan"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("30/30 exact"));
    let failures = fs::read_to_string(dir.path().join("verify-catalan-failures.csv")).unwrap();
    assert_eq!(failures.lines().count(), 1, "header only: {failures}");
}

#[test]
fn manifest_digests_match_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["--quiet", "stationary-density", "--lambda", "1.5"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let m = manifest(&dir.path().join("stationary-density.manifest.json"));
    let outputs = m["outputs"].as_array().unwrap();
    assert_eq!(outputs.len(), 2);
    for out in outputs {
        let bytes = fs::read(out["path"].as_str().unwrap()).unwrap();
        assert_eq!(out["sha256"].as_str().unwrap(), hex::encode(Sha256::digest(&bytes)));
    }
    let defaulted: Vec<&str> = m["defaulted"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert!(defaulted.contains(&"theta") && !defaulted.contains(&"lambda"));
    let atoms = fs::read_to_string(dir.path().join("stationary-density-atoms.csv")).unwrap();
    assert!(atoms.starts_with("location,mass\n"));
}

#[test]
fn recorded_flags_reproduce_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["--quiet", "oracle", "--dim", "12", "--steps", "10", "--trials", "3", "--seed", "7"];
    assert_eq!(run(dir.path(), &args).status.code(), Some(0));
    let first = manifest(&dir.path().join("oracle.manifest.json"));
    let recorded: Vec<String> = first["command_line"].as_array().unwrap()[1..]
        .iter()
        .map(|v| v.as_str().unwrap().to_string())
        .collect();
    let recorded: Vec<&str> = recorded.iter().map(String::as_str).collect();
    assert_eq!(run(dir.path(), &recorded).status.code(), Some(0));
    let second = manifest(&dir.path().join("oracle.manifest.json"));
    assert_eq!(first["outputs"][0]["sha256"], second["outputs"][0]["sha256"]);
    assert_eq!(second["seeds"].as_array().unwrap().len(), 4);
    let csv = fs::read_to_string(dir.path().join("oracle.csv")).unwrap();
    assert!(csv.starts_with("n,t,estimate,stderr,N,steps,trials,mode\n"));
}

#[test]
fn explicit_out_path_wins() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("nested").join("w.csv");
    let o = run(dir.path(), &["--quiet", "words", "--n", "4", "--out", target.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(target.exists());
    assert!(dir.path().join("nested").join("w.manifest.json").exists());
    let rows = fs::read_to_string(&target).unwrap();
    assert_eq!(rows.lines().count(), 1 + 5);
}

#[test]
fn density_and_series_checks_pass() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["--quiet", "density", "--t", "2", "--grid", "chebyshev", "--grid-points", "2048"]);
    assert_eq!(o.status.code(), Some(0));
    let m = manifest(&dir.path().join("density.manifest.json"));
    assert!((m["results"]["mass"].as_f64().unwrap() - 1.0).abs() < 1e-8);
    for check in ["alpha", "rho", "mgf", "pde", "decomposition"] {
        let lambda = if check == "decomposition" { "0.6" } else { "1" };
        let o = run(dir.path(), &["--quiet", "series", "--check", check, "--lambda", lambda]);
        assert_eq!(o.status.code(), Some(0), "{check}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let dump: Value = serde_json::from_slice(&fs::read(dir.path().join("series.json")).unwrap()).unwrap();
    assert!(dump["decomposition"]["c"].is_array());
}
