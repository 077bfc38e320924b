use std::path::Path;
use std::process::{Command, Output};

fn kerr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kerr-modes"))
        .args(args)
        .env_remove("KERR_MODES_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn coeffs_prints_exact_and_decimal() {
    let o = kerr(&["coeffs", "--p", "3", "--q", "0"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "1/8\n0.125\n");
}

#[test]
fn exit_codes() {
    assert_eq!(kerr(&["spectrum", "--model", "twomode"]).status.code(), Some(1));
    assert_eq!(kerr(&["spectrum", "--k", "-1"]).status.code(), Some(1));
    assert_eq!(kerr(&["spectrum", "--phi0", "2.4", "--branch", "middle"]).status.code(), Some(1));
    assert_eq!(kerr(&["--config", "/nonexistent.toml", "mu"]).status.code(), Some(1));
    assert_eq!(kerr(&["mu", "--cutoff", "20"]).status.code(), Some(0));
}

#[test]
fn unstable_point_is_accepted_on_request() {
    let o = kerr(&["spectrum", "--phi0", "2.4", "--branch", "middle", "--allow-unstable", "--omega-points", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let args = ["spectrum", "--model", "twomode", "--p", "4", "--dphi", "1", "--omega-points", "41"];
    let a = kerr(&args);
    let b = kerr(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn json_reingest_reproduces_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first.json");
    let o = kerr(&[
        "spectrum", "--model", "twomode", "--p", "3", "--dphi", "1", "--lo", "optimized",
        "--omega-points", "17", "--format", "json", "--out", path(&first),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let again = kerr(&["spectrum", "--input", path(&first), "--format", "json"]);
    assert!(again.status.success());
    assert_eq!(stdout(&again), std::fs::read_to_string(&first).unwrap());
}

#[test]
fn preset_fig1_has_six_series() {
    let dir = tempfile::tempdir().unwrap();
    let o = kerr(&["preset", "fig1", "--out", path(dir.path())]);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(dir.path().join("fig1.csv")).unwrap();
    let mut labels: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    labels.dedup();
    assert_eq!(labels.len(), 6);
    assert!(dir.path().join("fig1.svg").exists());
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("fig1.json")).unwrap()).unwrap();
    assert_eq!(doc["series"].as_array().unwrap().len(), 6);
    assert_eq!(doc["partial"], false);
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_kerr-modes"))
        .args(["mu", "--cutoff", "30"])
        .env("KERR_MODES_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    assert!(std::fs::read_to_string(dir.path().join("mu.csv")).unwrap().starts_with("name,value\nmu1,"));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[model]\nkind = \"twomode\"\np = 3\ndelta_phi = 1.0\n\n[omega]\npoints = 5\n").unwrap();
    let from_file = kerr(&["--config", path(&cfg), "spectrum"]);
    let by_flags = kerr(&["spectrum", "--model", "twomode", "--p", "3", "--dphi", "1", "--omega-points", "5"]);
    assert!(from_file.status.success());
    assert_eq!(from_file.stdout, by_flags.stdout);
    let overridden = kerr(&["--config", path(&cfg), "spectrum", "--p", "5"]);
    assert_ne!(overridden.stdout, from_file.stdout);
    assert_eq!(stdout(&overridden).lines().count(), 6);

    std::fs::write(&cfg, "[model]\nbogus = 1\n").unwrap();
    assert_eq!(kerr(&["--config", path(&cfg), "spectrum"]).status.code(), Some(1));
}

#[test]
fn selftest_passes() {
    let o = kerr(&["selftest"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with("PASS")).count(), 4);
}
