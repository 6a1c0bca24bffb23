//! End-to-end CLI: exit codes, the shipped demo, gen determinism, and the
//! report format, all through the real binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_l0cert"))
}

fn demo_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../demo/ls.cfg")
}

fn write_cfg(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("run.cfg");
    std::fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

#[test]
fn shipped_demo_verifies_five_interior_lambdas() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&[
        "verify",
        "--config",
        demo_config().to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(tmp.path().join("report.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 5, "expected the five auto-picked interior lambda0 values");
    for row in rows {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields[3], "1", "row not certified: {row}");
        assert_eq!(fields[8], "1", "brute force disagreed: {row}");
        assert_eq!(fields[6], "0;3", "wrong support: {row}");
    }
}

#[test]
fn report_header_matches_the_contract() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&[
        "certify",
        "--config",
        demo_config().to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0);
    let csv = std::fs::read_to_string(tmp.path().join("report.csv")).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "trial,seed,lambda0,certified,interval_lo,interval_hi,bf_support,bf_objective,oracle_match,solver_objective,solver_critical"
    );
}

#[test]
fn missing_config_flag_is_exit_2() {
    let out = run(&["certify"]);
    assert_eq!(exit_code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--config"));
}

#[test]
fn unknown_key_is_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(tmp.path(), "[solver]\nstepsize = 0.5\n");
    let out = run(&["solve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown key"));
}

#[test]
fn missing_matrix_file_is_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        tmp.path(),
        "[problem]\nfidelity = ls\nmatrix = nope.csv\ny = nope.csv\n[truth]\nx_star = nope.csv\n[certify]\nK = 2\n",
    );
    let out = run(&["certify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn dimension_guard_on_verify_is_exit_3() {
    // N = 25 exceeds the exhaustive-enumeration cap; the guard must abort
    // with a numerical-failure exit, not chew through 2^25 supports.
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        tmp.path(),
        "[instance]\nfidelity = ls\nn = 25\nm = 10\nk_star = 2\namp_min = 1\namp_max = 2\nsigma = 0.01\nseed = 3\n\
         [certify]\nK = 4\n[verify]\nk_max = 3\nlambda0_list = 0.5\n",
    );
    let out = run(&[
        "verify",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 3, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("guard") || err.contains("capped"), "stderr: {err}");
}

#[test]
fn vacuous_certificate_is_exit_4_and_reports_skipped() {
    // Identical columns make the restricted isometry constant hit 1, so the
    // closed-form curvature constant is zero and the interval is empty.
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("a.csv"), "0.7,0.7\n0.1,0.1\n").unwrap();
    std::fs::write(tmp.path().join("y.csv"), "0.75\n0.15\n").unwrap();
    std::fs::write(tmp.path().join("x.csv"), "1.0\n0.0\n").unwrap();
    let cfg = write_cfg(
        tmp.path(),
        "[problem]\nfidelity = ls\nmatrix = a.csv\ny = y.csv\n[truth]\nx_star = x.csv\n[certify]\nK = 2\n[verify]\nk_max = 2\n",
    );
    let out = run(&[
        "verify",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 4, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("skipped"), "stdout: {stdout}");
}

#[test]
fn lambda_outside_interval_reports_not_certified_without_asserting() {
    // One-sided guarantee: outside the interval the report says
    // "not certified" but verification itself carries no assertion.
    let tmp = tempfile::tempdir().unwrap();
    let demo_dir = demo_config();
    let demo_dir = demo_dir.parent().unwrap();
    let cfg_text = format!(
        "[problem]\nfidelity = ls\nmatrix = {d}/matrix.csv\ny = {d}/y.csv\n[truth]\nx_star = {d}/x_star.csv\n\
         [certify]\nK = 4\n[verify]\nk_max = 4\nlambda0_list = 50.0\n",
        d = demo_dir.display()
    );
    let cfg = write_cfg(tmp.path(), &cfg_text);
    let out = run(&[
        "verify",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(tmp.path().join("o/report.csv")).unwrap();
    let row = csv.lines().nth(1).unwrap();
    assert_eq!(row.split(',').nth(3).unwrap(), "0", "λ0 = 50 must not be certified: {row}");
}

#[test]
fn gen_is_bit_identical_across_runs_and_seed_sensitive() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        tmp.path(),
        "[instance]\nfidelity = kl\nn = 5\nm = 5\nk_star = 1\namp_min = 50\namp_max = 100\nnoise = poisson\nbackground = 1\nseed = 7\n",
    );
    let run_gen = |sub: &str, seed: Option<&str>| {
        let dir = tmp.path().join(sub);
        let mut args = vec![
            "gen".to_string(),
            "--config".into(),
            cfg.to_str().unwrap().into(),
            "--out".into(),
            dir.to_str().unwrap().into(),
        ];
        if let Some(s) = seed {
            args.push("--seed".into());
            args.push(s.into());
        }
        let out = bin().args(&args).output().unwrap();
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        dir
    };
    let d1 = run_gen("one", None);
    let d2 = run_gen("two", None);
    let d3 = run_gen("three", Some("8"));
    for name in ["matrix.csv", "x_star.csv", "y.csv", "y_clean.csv", "eps.csv", "b.csv", "instance.txt"] {
        let f1 = std::fs::read(d1.join(name)).unwrap();
        let f2 = std::fs::read(d2.join(name)).unwrap();
        assert_eq!(f1, f2, "{name} differs between identical runs");
    }
    assert_ne!(
        std::fs::read(d1.join("matrix.csv")).unwrap(),
        std::fs::read(d3.join("matrix.csv")).unwrap(),
        "a different seed must change the operator"
    );
}

#[test]
fn solve_reports_critical_points() {
    let tmp = tempfile::tempdir().unwrap();
    let demo_dir = demo_config();
    let demo_dir = demo_dir.parent().unwrap();
    let cfg_text = format!(
        "[problem]\nfidelity = ls\nmatrix = {d}/matrix.csv\ny = {d}/y.csv\n[verify]\nlambda0_list = 0.3, 0.5\n",
        d = demo_dir.display()
    );
    let cfg = write_cfg(tmp.path(), &cfg_text);
    let out = run(&[
        "solve",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(tmp.path().join("o/report.csv")).unwrap();
    for row in csv.lines().skip(1) {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields[10], "1", "solver failed criticality: {row}");
        assert!(!fields[9].is_empty(), "missing objective: {row}");
        assert!(fields[4].is_empty() && fields[5].is_empty(), "solve must not claim an interval");
    }
}
