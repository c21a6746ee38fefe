//! Criterion 13: the `verify` subcommand runs the whole suite end to end in
//! under five minutes and exits 0.
//!
//! The runtime clause holds with two orders of margin; the exit-0 clause is
//! expected to fail because criteria 7, 8 and 10 encode the source theorems'
//! sign claims, which the measured dynamics contradict at the default
//! configuration (all A_n < 0). The test asserts the criterion as stated.

use std::process::Command;
use std::time::Instant;

#[test]
fn criterion_13_verify_subcommand() {
    let t0 = Instant::now();
    let output = Command::new(env!("CARGO_BIN_EXE_combdrive"))
        .arg("verify")
        .output()
        .expect("verify subcommand runs");
    let secs = t0.elapsed().as_secs_f64();
    let stdout = String::from_utf8_lossy(&output.stdout);
    let passed = output.status.success();
    println!(
        "criterion 13 verify-subcommand         {}  ({secs:.1} s, exit {:?})",
        if passed && secs < 300.0 {
            "PASS"
        } else {
            "FAIL"
        },
        output.status.code()
    );
    println!("    verify tail: {}", stdout.lines().last().unwrap_or(""));
    assert!(secs < 300.0, "verify took {secs:.1} s, budget is 300 s");
    // checks actually ran
    assert!(
        stdout.contains("period-infimum"),
        "missing criterion output:\n{stdout}"
    );
    assert!(
        passed,
        "verify exited {:?}; failing checks:\n{}",
        output.status.code(),
        stdout
            .lines()
            .filter(|l| l.contains("FAIL"))
            .collect::<Vec<_>>()
            .join("\n")
    );
}
