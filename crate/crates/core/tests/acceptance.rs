//! Verification-suite gate: every library-level check must pass.
//!
//! The checks run sequentially inside a single test because each one carries
//! its own wall-clock budget; running them concurrently on a shared core
//! would distort the timings. One line is printed per check (visible with
//! `--nocapture` or `--show-output`, and always shown on failure).

use rpde_core::suite;

#[test]
fn verification_suite() {
    let outcomes = suite::run_all();
    for o in &outcomes {
        println!("{o}");
    }
    let failed: Vec<String> = outcomes
        .iter()
        .filter(|o| !o.passed)
        .map(|o| o.to_string())
        .collect();
    assert!(
        failed.is_empty(),
        "{} of {} checks failed:\n{}",
        failed.len(),
        outcomes.len(),
        failed.join("\n")
    );
}
