use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tpmcert::report::read_report;

fn tpmcert(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tpmcert")).args(args).output().unwrap()
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

#[test]
fn malformed_counts_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "x,a,b,count\n0,0,0,-1\n").unwrap();
    let out = tpmcert(&["certify", "--counts", bad.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 2"));
}

#[test]
fn domain_and_resource_errors_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = tpmcert(&["decay", "--initial-gamma", "0.3", "--out", d]);
    assert_eq!(out.status.code(), Some(3));
    let out = tpmcert(&["classical-bound", "--x", "9", "--out", d]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn simulated_counts_certify_to_the_same_report() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim");
    let cert = dir.path().join("cert");
    let out = tpmcert(&[
        "simulate", "--preset", "memory_test", "--shots", "20000", "--seed", "3",
        "--resamples", "200", "--out", sim.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = tpmcert(&[
        "certify",
        "--counts", sim.join("counts.csv").to_str().unwrap(),
        "--do-counts", sim.join("do_counts.csv").to_str().unwrap(),
        "--resamples", "200", "--seed", "3",
        "--out", cert.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let a = read_report(sim.join("report.json")).unwrap();
    let b = read_report(cert.join("report.json")).unwrap();
    assert_eq!(a.gamma, b.gamma);
    assert_eq!(a.pearl_delta, b.pearl_delta);
    assert!(b.verdict_nonclassical);
    assert!((b.gamma - (2.0 - std::f64::consts::SQRT_2)).abs() < 0.05);
}

#[test]
fn certify_fixture_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = tpmcert(&[
        "certify",
        "--counts", fixture("published_observational.csv").to_str().unwrap(),
        "--resamples", "100",
        "--out", dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let r = read_report(dir.path().join("report.json")).unwrap();
    assert!((r.gamma - 0.642).abs() < 1e-12);
    assert!(r.acde.is_none());
}

#[test]
fn wait_without_noise_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = tpmcert(&[
        "simulate", "--preset", "memory_test", "--exact", "--wait-ms", "10",
        "--out", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}
