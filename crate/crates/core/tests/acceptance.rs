//! Acceptance suite: one test per verification criterion, each printing its
//! pass/fail summary line and failing loudly with the collected details.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see every line.

use specrad::verify;

fn assert_criterion(outcome: verify::CriterionOutcome, budget_seconds: f64) {
    println!("{}", outcome.summary_line());
    for line in &outcome.details {
        println!("  {line}");
    }
    assert!(
        outcome.pass,
        "criterion {} failed:\n{}",
        outcome.id,
        outcome.details.join("\n")
    );
    assert!(
        outcome.seconds < budget_seconds,
        "criterion {} took {:.2}s, budget {budget_seconds}s",
        outcome.id,
        outcome.seconds
    );
}

#[test]
fn criterion_1_stern_exact_anchors() {
    assert_criterion(verify::criterion_1(), 1.0);
}

#[test]
fn criterion_2_stern_identity() {
    assert_criterion(verify::criterion_2(), 10.0);
}

#[test]
fn criterion_3_stern_envelope() {
    assert_criterion(verify::criterion_3(), 5.0);
}

#[test]
fn criterion_4_thue_morse_exact_anchors() {
    assert_criterion(verify::criterion_4(), 30.0);
}

#[test]
fn criterion_5_thue_morse_growth() {
    assert_criterion(verify::criterion_5(), 120.0);
}

#[test]
fn criterion_6_thue_morse_constants() {
    assert_criterion(verify::criterion_6(), 1.0);
}

#[test]
fn criterion_7_word_sum_machinery() {
    assert_criterion(verify::criterion_7(), 180.0);
}

#[test]
fn criterion_8_hypothesis_suites() {
    assert_criterion(verify::criterion_8(), 30.0);
}
