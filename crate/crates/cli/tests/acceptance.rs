//! End-to-end gate for the command-line front end: reruns are reproducible
//! byte for byte, and the built-in verification suite passes from the CLI
//! within its overall time budget.

use std::fs;
use std::process::Command;
use std::time::Instant;

fn rpde() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rpde"))
}

#[test]
fn cli_reproducibility_and_check() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.json");
    fs::write(
        &cfg_path,
        r#"{
            "driver": {"hurst": 0.45, "steps": 256, "horizon": 1.0, "seed": 42, "alpha": 0.42},
            "space": {"dim": 1, "cutoff": 8, "mass_shift": 1.0},
            "coefficients": {"preset": "linear_diffusion", "lambda": 0.5, "sigma": 0.1},
            "initial": {"mean": 1.0, "modes": [{"k": [1], "amplitude": 0.5}]},
            "solver": {"gamma": 0.9, "alpha": 0.42, "sigma": 0.1, "picard_tol": 1e-9,
                       "max_iters": 80, "depth": 4, "blowup_factor": 1e6}
        }"#,
    )
    .unwrap();

    // Identical lift invocations must produce byte-identical driver files.
    let mut lift_bytes = Vec::new();
    for run in ["lift-a", "lift-b"] {
        let out_dir = dir.path().join(run);
        let out = rpde()
            .arg("lift")
            .arg("--config")
            .arg(&cfg_path)
            .arg("--out")
            .arg(&out_dir)
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "lift failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        lift_bytes.push(fs::read(out_dir.join("driver.csv")).unwrap());
    }
    let lift_identical = lift_bytes[0] == lift_bytes[1];

    // Identical solve invocations must reproduce every artifact exactly.
    let artifacts = [
        "driver.csv",
        "solution.csv",
        "windows.csv",
        "norms.csv",
        "constants.json",
    ];
    let mut solve_dirs = Vec::new();
    for run in ["solve-a", "solve-b"] {
        let out_dir = dir.path().join(run);
        let out = rpde()
            .arg("solve")
            .arg("--config")
            .arg(&cfg_path)
            .arg("--out")
            .arg(&out_dir)
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "solve failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        solve_dirs.push(out_dir);
    }
    let mut solve_identical = true;
    for name in artifacts {
        let a = fs::read(solve_dirs[0].join(name)).unwrap();
        let b = fs::read(solve_dirs[1].join(name)).unwrap();
        solve_identical &= a == b;
    }

    // The full verification suite, invoked through the binary.
    let started = Instant::now();
    let check = rpde().arg("check").output().unwrap();
    let check_seconds = started.elapsed().as_secs_f64();
    let check_stdout = String::from_utf8_lossy(&check.stdout);
    let pass_lines = check_stdout
        .lines()
        .filter(|l| l.starts_with("PASS "))
        .count();
    let budget = 900.0;

    let passed = lift_identical
        && solve_identical
        && check.status.success()
        && pass_lines == 8
        && check_seconds < budget;
    println!(
        "{} cli-reproducibility ({check_seconds:.2}s): lift reruns identical: {lift_identical}, solve reruns identical over {} files: {solve_identical}, check exit {:?} with {pass_lines}/8 passing lines (budget {budget:.0}s)",
        if passed { "PASS" } else { "FAIL" },
        artifacts.len(),
        check.status.code(),
    );
    assert!(passed, "check output:\n{check_stdout}");
}
