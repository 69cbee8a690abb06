//! Behavioral tests for the `rpde` binary: exit codes, output files, and
//! flag/environment handling.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn rpde() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rpde"))
}

fn write_config(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary should launch")
}

#[test]
fn lift_writes_driver_file_with_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(rpde()
        .args(["lift", "--seed", "9", "--steps", "64"])
        .arg("--out")
        .arg(dir.path()));
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = fs::read_to_string(dir.path().join("driver.csv")).unwrap();
    assert!(text.starts_with("# alpha="));
    assert!(text.contains("seed=9"));
    assert!(text.contains("generator=fgn-circulant-v1"));
    assert_eq!(text.lines().count(), 2 + 65);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("additivity defect"));
}

#[test]
fn solve_writes_the_full_artifact_set() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "run.json",
        r#"{"driver": {"steps": 64, "seed": 3}, "solver": {"picard_tol": 1e-7}}"#,
    );
    let out = run(rpde()
        .arg("solve")
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path()));
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    for name in [
        "driver.csv",
        "solution.csv",
        "windows.csv",
        "norms.csv",
        "constants.json",
    ] {
        assert!(dir.path().join(name).exists(), "{name} missing");
    }
    let sol = fs::read_to_string(dir.path().join("solution.csv")).unwrap();
    assert!(sol.starts_with("t,norm_gamma,norm_gamma_minus_alpha,residual\n"));
    assert_eq!(sol.lines().count(), 1 + 65);
    let constants: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("constants.json")).unwrap())
            .unwrap();
    assert!(constants["c"].as_f64().unwrap() > 0.0);
}

#[test]
fn seed_override_changes_the_sample() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(
        run(rpde().args(["lift", "--seed", "1"]).arg("--out").arg(&a))
            .status
            .success()
    );
    assert!(
        run(rpde().args(["lift", "--seed", "2"]).arg("--out").arg(&b))
            .status
            .success()
    );
    assert_ne!(
        fs::read(a.join("driver.csv")).unwrap(),
        fs::read(b.join("driver.csv")).unwrap()
    );
}

#[test]
fn env_var_sets_the_output_root() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(rpde()
        .args(["lift", "--steps", "32"])
        .env("RPDE_OUT", dir.path().join("nested")));
    assert!(out.status.success());
    assert!(dir.path().join("nested/driver.csv").exists());
}

#[test]
fn deterministic_drivers_are_available() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "sine.json",
        r#"{"driver": {"kind": "sine", "steps": 32, "amplitude": 0.5}}"#,
    );
    let out = run(rpde()
        .arg("lift")
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path()));
    assert!(out.status.success());
    let text = fs::read_to_string(dir.path().join("driver.csv")).unwrap();
    assert!(text.contains("kind=sine"));
    assert!(!text.contains("generator="));
}

#[test]
fn unknown_config_fields_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.json", r#"{"mystery": true}"#);
    let out = run(rpde()
        .arg("lift")
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path()));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("mystery"));
}

#[test]
fn invalid_parameters_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    // Hurst outside the supported range.
    let out = run(rpde()
        .args(["lift", "--hurst", "0.9"])
        .arg("--out")
        .arg(dir.path()));
    assert_eq!(out.status.code(), Some(2));

    // Unknown coefficient preset.
    let cfg = write_config(
        dir.path(),
        "preset.json",
        r#"{"coefficients": {"preset": "who-knows"}}"#,
    );
    let out = run(rpde()
        .arg("solve")
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path()));
    assert_eq!(out.status.code(), Some(2));

    // Missing config file is an I/O failure, not a config failure.
    let out = run(rpde()
        .arg("solve")
        .arg("--config")
        .arg(dir.path().join("nope.json"))
        .arg("--out")
        .arg(dir.path()));
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn blow_up_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "blow.json",
        r#"{
            "driver": {"horizon": 2.0, "steps": 128},
            "coefficients": {"preset": "quadratic_unsafe", "lambda": 1.0},
            "initial": {"mean": 3.0, "modes": []},
            "solver": {"max_iters": 200, "blowup_factor": 100.0,
                       "window": {"policy": "fixed_count", "count": 1}}
        }"#,
    );
    let out = run(rpde()
        .arg("solve")
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path()));
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("blow-up"));
}

#[test]
fn overstated_regularity_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    // The driver is sampled at Hurst 0.35 but the lift claims 0.48, so the
    // fitted compensated-integration rate lands far below 3 * 0.48 - 0.1.
    let cfg = write_config(
        dir.path(),
        "rough.json",
        r#"{
            "driver": {"hurst": 0.35, "alpha": 0.48, "steps": 256},
            "coefficients": {"preset": "linear_diffusion", "lambda": 0.2},
            "solver": {"alpha": 0.48, "picard_tol": 1e-8}
        }"#,
    );
    let out = run(rpde()
        .arg("converge")
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path()));
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("floor"));
    // The measured table is still written for diagnosis.
    assert!(dir.path().join("rates.csv").exists());
}

#[test]
fn cocycle_reports_discrepancy_and_honors_bound() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"driver": {"steps": 64, "seed": 5}}"#,
    );
    let out = run(rpde()
        .arg("cocycle")
        .arg("--config")
        .arg(&cfg)
        .args(["--tau", "16"]));
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("restart discrepancy"));

    let out = run(rpde()
        .arg("cocycle")
        .arg("--config")
        .arg(&cfg)
        .args(["--tau", "16", "--bound", "1e-30"]));
    assert_eq!(out.status.code(), Some(1));

    let out = run(rpde()
        .arg("cocycle")
        .arg("--config")
        .arg(&cfg)
        .args(["--tau", "500"]));
    assert_eq!(out.status.code(), Some(2));
}
