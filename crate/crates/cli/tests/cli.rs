//! Exit-code contract and artifact formats of the `rvm` binary.

use rvm_cli::output::{DIAGNOSTIC_COLUMNS, ITERATE_COLUMNS};
use std::path::{Path, PathBuf};
use std::process::Command;

fn bundled(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(format!("{name}.rvm"))
}

fn rvm(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_rvm")).args(args).output().expect("binary runs");
    (
        out.status.code().expect("exit code"),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn simulate(scenario: &Path, out: &Path) -> (i32, String) {
    let (code, _, err) = rvm(&[
        "--mode",
        "simulate",
        "--scenario",
        scenario.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--quiet",
    ]);
    (code, err)
}

fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(str::to_string).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(str::to_string).collect()).collect();
    (header, rows)
}

fn write_scenario(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("s.rvm");
    std::fs::write(&p, body).unwrap();
    p
}

const ONE_BLOB: &str = "
[scenario]
name = one-step
initial_field = poisson-blob
mollifier_radius = 0.2

[particles]
particle = 0 0 0  0.3 0 0  1

[numerics]
dt = 0.05
horizon = 0.05
";

#[test]
fn neutral_rest_has_zero_first_distance() {
    let dir = tempfile::tempdir().unwrap();
    let (code, err) = simulate(&bundled("neutral-pair-rest"), dir.path());
    assert_eq!(code, 0, "{err}");
    let (header, rows) = csv_rows(&dir.path().join("iterates.csv"));
    assert_eq!(header, ITERATE_COLUMNS);
    assert_eq!(rows[1][0], "1");
    assert_eq!(rows[1][1].parse::<f64>().unwrap(), 0.0);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["status"], "ok");
    for key in ["c0", "c_t"] {
        assert!(summary["gronwall"][key].is_number(), "{key}");
    }
    for key in ["c_a", "c_b"] {
        assert!(summary["kernel_constants"][key].is_number(), "{key}");
    }
}

#[test]
fn zero_time_step_is_malformed() {
    let dir = tempfile::tempdir().unwrap();
    let s = write_scenario(dir.path(), &ONE_BLOB.replace("dt = 0.05", "dt = 0"));
    let (code, err) = simulate(&s, &dir.path().join("out"));
    assert_eq!(code, 2, "{err}");
}

#[test]
fn parse_errors_name_line_and_field() {
    let dir = tempfile::tempdir().unwrap();
    let s = write_scenario(dir.path(), &ONE_BLOB.replace("horizon = 0.05", "horizon = soon"));
    let (code, err) = simulate(&s, &dir.path().join("out"));
    assert_eq!(code, 2);
    assert!(err.contains(":12: horizon:"), "{err}");
}

#[test]
fn unknown_mode_and_missing_scenario_are_malformed() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(rvm(&["--mode", "validate-all", "--out", out]).0, 2);
    assert_eq!(rvm(&["--mode", "simulate", "--out", out]).0, 2);
    assert_eq!(rvm(&["--mode", "simulate", "--scenario", "/nonexistent.rvm", "--out", out]).0, 1);
    assert_eq!(rvm(&["--bogus-flag"]).0, 2);
}

#[test]
fn single_step_run_has_two_rows() {
    let dir = tempfile::tempdir().unwrap();
    let s = write_scenario(dir.path(), ONE_BLOB);
    let (code, err) = simulate(&s, &dir.path().join("out"));
    assert_eq!(code, 0, "{err}");
    let (header, rows) = csv_rows(&dir.path().join("out/diagnostics.csv"));
    assert_eq!(header, DIAGNOSTIC_COLUMNS);
    assert_eq!(rows.len(), 2);
    let text = std::fs::read_to_string(dir.path().join("out/diagnostics.csv")).unwrap();
    assert!(text.starts_with(
        "t,sup_rho,l1_rho,sup_h,j_l2_sq,field_energy,poynting_residual,pbar,wbar,envelope_w,margin_gronwall,margin_working,status\n"
    ));
}

#[test]
fn rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(simulate(&bundled("like-sign-pair"), &a).0, 0);
    assert_eq!(simulate(&bundled("like-sign-pair"), &b).0, 0);
    for f in ["diagnostics.csv", "iterates.csv", "summary.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let one = dir.path().join("one");
    let out = Command::new(env!("CARGO_BIN_EXE_rvm"))
        .args(["--scenario", bundled("single-blob-drift").to_str().unwrap(), "--out", one.to_str().unwrap(), "--quiet"])
        .env("RVM_THREADS", "1")
        .status()
        .unwrap();
    assert!(out.success());
    let four = dir.path().join("four");
    let (code, _, _) = rvm(&[
        "--scenario",
        bundled("single-blob-drift").to_str().unwrap(),
        "--out",
        four.to_str().unwrap(),
        "--threads",
        "4",
        "--quiet",
    ]);
    assert_eq!(code, 0);
    assert_eq!(
        std::fs::read(one.join("diagnostics.csv")).unwrap(),
        std::fs::read(four.join("diagnostics.csv")).unwrap()
    );
}

#[test]
fn envelope_dominates_wbar_in_every_row() {
    for name in ["like-sign-pair", "neutral-pair-opposite-p", "single-blob-drift"] {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(simulate(&bundled(name), dir.path()).0, 0, "{name}");
        let (header, rows) = csv_rows(&dir.path().join("diagnostics.csv"));
        let col = |n: &str| header.iter().position(|h| h == n).unwrap();
        for r in &rows {
            let env: f64 = r[col("envelope_w")].parse().unwrap();
            let w: f64 = r[col("wbar")].parse().unwrap();
            assert!(env >= w, "{name}: {env} < {w}");
            assert_eq!(r[col("status")], "ok");
        }
    }
}

#[test]
fn breach_exits_three_and_marks_rows() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(simulate(&bundled("breach-rho"), dir.path()).0, 3);
    let (header, rows) = csv_rows(&dir.path().join("diagnostics.csv"));
    let status = header.iter().position(|h| h == "status").unwrap();
    assert!(rows.iter().all(|r| r[status] == "breached"));
}

#[test]
fn speed_limit_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let s = write_scenario(
        dir.path(),
        "
[scenario]
initial_field = poisson-blob
mollifier_radius = 0.2
[particles]
particle = 0 0 0  0.99e9 0 0  1
[numerics]
dt = 0.05
horizon = 0.1
",
    );
    let (code, err) = simulate(&s, &dir.path().join("out"));
    assert_eq!(code, 3, "{err}");
}

#[test]
fn validate_lightcone_writes_passing_report() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stdout, _) = rvm(&["--mode", "validate-lightcone", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(stdout.contains("beta = 0.99"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
    let angular: Vec<_> = report["checks"].as_array().unwrap().iter().filter(|c| c["group"] == "angular").collect();
    assert!(angular.len() >= 11);
    assert!(angular.iter().all(|c| c["error"].as_f64().unwrap() <= 1e-8));
    assert!(dir.path().join("report.txt").exists());
}
