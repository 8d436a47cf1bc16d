use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sbm-potential"))
}

fn run(args: &[&str]) -> Output {
    bin()
        .args(args)
        .env_remove("SBM_POTENTIAL_OUT")
        .output()
        .expect("binary runs")
}

#[test]
fn no_arguments_is_a_usage_error() {
    assert_eq!(run(&[]).status.code(), Some(2));
}

#[test]
fn unknown_ids_are_usage_errors() {
    assert_eq!(run(&["verify", "exp_nope"]).status.code(), Some(2));
    assert_eq!(run(&["--phi", "stable:alpha=3.0", "kernels"]).status.code(), Some(2));
    assert_eq!(run(&["--domain", "moebius", "fatness"]).status.code(), Some(2));
}

#[test]
fn kernels_csv_has_header_and_one_row_per_radius() {
    let out = run(&[
        "--format",
        "csv",
        "kernels",
        "--lo",
        "0.1",
        "--hi",
        "10",
        "--per-decade",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("r,phi_r_inv2,j,g,quadrature_rel_error,flagged"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().all(|r| r.ends_with(",false")));
}

#[test]
fn fatness_passes_for_every_catalog_domain() {
    let out = run(&["--format", "csv", "fatness"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().count() > 1);
}

fn verify_into(dir: &Path) -> Output {
    bin()
        .args(["--seed", "7", "--samples", "200", "--out"])
        .arg(dir)
        .args(["verify", "exp_harnack"])
        .output()
        .unwrap()
}

#[test]
fn verify_writes_identical_reports_on_rerun() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(verify_into(a.path()).status.code(), Some(0));
    assert_eq!(verify_into(b.path()).status.code(), Some(0));
    let ra = fs::read(a.path().join("exp_harnack.json")).unwrap();
    let rb = fs::read(b.path().join("exp_harnack.json")).unwrap();
    assert_eq!(ra, rb);
    let v: serde_json::Value = serde_json::from_slice(&ra).unwrap();
    assert_eq!(v["experiment"], "exp_harnack");
    assert_eq!(v["provenance"]["seed"], 7);
}

#[test]
fn config_file_is_accepted_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    let mut c = serde_json::to_value(sbm_potential::harness::ExperimentConfig::new(
        sbm_potential::harness::ExperimentId::Harnack,
        "stable:alpha=1.0".parse().unwrap(),
    ))
    .unwrap();
    c["path"]["samples"] = 100.into();
    fs::write(&cfg, serde_json::to_vec(&c).unwrap()).unwrap();
    let out = bin()
        .arg("--config")
        .arg(&cfg)
        .args(["--seed", "11", "verify", "harnack"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["provenance"]["samples"], 100);
    assert_eq!(v["provenance"]["seed"], 11);
}
