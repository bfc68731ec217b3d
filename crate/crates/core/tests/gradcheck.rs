//! Finite-difference verification of every analytic gradient. These are the
//! oracles the kernels are built against: if any backward pass drifts from
//! the forward math, these fail.

use lyricgen_core::gradcheck::{
    check_attention, check_bilstm, check_full_model, check_lstm_step, check_softmax_xent,
    fd_check, run_all, GRADCHECK_TOL,
};
use lyricgen_core::model::AttentionVariant;
use lyricgen_core::tensor::Tensor;

#[test]
fn softmax_xent_gradient_matches_fd() {
    let report = check_softmax_xent(11);
    assert!(
        report.max_rel_err < 1e-6,
        "{}: {}",
        report.name,
        report.max_rel_err
    );
}

#[test]
fn lstm_step_gradients_match_fd() {
    for report in check_lstm_step(17) {
        assert!(
            report.max_rel_err < GRADCHECK_TOL,
            "{}: {}",
            report.name,
            report.max_rel_err
        );
    }
}

#[test]
fn bilstm_gradients_match_fd() {
    for report in check_bilstm(23) {
        assert!(
            report.max_rel_err < GRADCHECK_TOL,
            "{}: {}",
            report.name,
            report.max_rel_err
        );
    }
}

#[test]
fn attention_gradients_match_fd_both_variants() {
    for variant in [AttentionVariant::Additive, AttentionVariant::Dot] {
        for report in check_attention(variant, 29) {
            assert!(
                report.max_rel_err < GRADCHECK_TOL,
                "{}: {}",
                report.name,
                report.max_rel_err
            );
        }
    }
}

#[test]
fn full_model_gradients_match_fd_both_variants() {
    for variant in [AttentionVariant::Additive, AttentionVariant::Dot] {
        for report in check_full_model(variant, 31).unwrap() {
            assert!(
                report.max_rel_err < GRADCHECK_TOL,
                "{}: {}",
                report.name,
                report.max_rel_err
            );
        }
    }
}

#[test]
fn full_battery_passes_and_is_deterministic() {
    let a = run_all(7).unwrap();
    assert!(a.all_pass(), "worst group error {}", a.worst());
    let b = run_all(7).unwrap();
    let errs_a: Vec<f64> = a.groups.iter().map(|g| g.max_rel_err).collect();
    let errs_b: Vec<f64> = b.groups.iter().map(|g| g.max_rel_err).collect();
    assert_eq!(errs_a, errs_b);
}

#[test]
fn harness_detects_an_injected_gradient_fault() {
    // A deliberately corrupted analytic gradient must be flagged; this is
    // the sensitivity check on the checker itself.
    let mut tensors = vec![Tensor::vector(vec![0.3, -0.7, 1.1])];
    let good = vec![Tensor::vector(vec![2.0 * 0.3, 2.0 * -0.7, 2.0 * 1.1])];
    let loss = |ts: &[Tensor]| ts[0].data().iter().map(|v| v * v).sum::<f64>();

    let errs = fd_check(&mut tensors, &good, &loss, 1e-5);
    assert!(errs[0] < GRADCHECK_TOL);

    let mut bad = good.clone();
    bad[0].data_mut()[1] += 1e-2;
    let errs = fd_check(&mut tensors, &bad, &loss, 1e-5);
    assert!(
        errs[0] > GRADCHECK_TOL,
        "fault injection went undetected: {}",
        errs[0]
    );
}
