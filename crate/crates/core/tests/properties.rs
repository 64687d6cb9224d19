//! Seeded property suites (`MPST_SEED` picks the seed).

mod common;

use common::*;

fn assert_report(name: &str, r: Report) {
    assert!(r.ok(), "{name}: {} of {} cases failed:\n{}", r.failures.len(), r.cases, r.failures.join("\n"));
}

#[test]
fn subject_reduction_on_generated_processes() {
    assert_report("subject reduction", subject_reduction(seed(), 500));
}

#[test]
fn projections_are_dual() {
    assert_report("duality", projection_duality(seed(), 500));
}

#[test]
fn labelled_and_plain_delta_steps_agree() {
    assert_report("delta steps", delta_step_agreement(seed(), 500));
}

#[test]
fn reduce_agrees_with_tau_moves() {
    assert_report("reduce vs step", reduce_matches_tau(seed(), 500));
}

#[test]
fn weak_closure_matches_paths() {
    assert_report("weak closure", weak_closure_oracle(seed(), 100));
}

#[test]
fn normal_form_decides_congruence() {
    assert_report("congruence", congruence_oracle(seed(), 300));
}

#[test]
fn other_seeds() {
    for s in [1, 2, 3] {
        assert_report("subject reduction", subject_reduction(s, 100));
        assert_report("reduce vs step", reduce_matches_tau(s, 100));
    }
}
