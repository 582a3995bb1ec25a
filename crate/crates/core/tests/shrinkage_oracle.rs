//! Thresholding rules against brute-force minimization of the scalar problem
//! `min_a tau |a|_p + (a - b)^2 / 2`, `p = 1` (soft) or `p = 0` (hard).

mod common;

use bm3d_frames::{threshold, ThresholdMode, ThresholdRule};
use proptest::prelude::*;
use rand::Rng;

fn objective(mode: ThresholdMode, tau: f64, a: f64, b: f64) -> f64 {
    let pen = match mode {
        ThresholdMode::Soft => a.abs(),
        ThresholdMode::Hard => f64::from(u8::from(a != 0.0)),
    };
    tau * pen + 0.5 * (a - b) * (a - b)
}

/// Exact minimizer over the finite candidate set that contains it: for the
/// l1 problem the stationary points `b -/+ tau` and the kink at 0, for l0
/// the points `0` and `b`.
fn brute_force(mode: ThresholdMode, tau: f64, b: f64) -> (f64, f64) {
    let cands: Vec<f64> = match mode {
        ThresholdMode::Soft => vec![0.0, b - tau, b + tau],
        ThresholdMode::Hard => vec![0.0, b],
    };
    cands
        .into_iter()
        .map(|a| (objective(mode, tau, a, b), a))
        .min_by(|x, y| x.0.total_cmp(&y.0))
        .unwrap()
}

#[test]
fn ten_thousand_scalars_match_brute_force() {
    let mut rng = common::rng(20);
    for mode in [ThresholdMode::Soft, ThresholdMode::Hard] {
        for _ in 0..10_000 {
            let tau = rng.random_range(0.0..10.0);
            let b = rng.random_range(-20.0..20.0);
            let rule = ThresholdRule::new(mode, tau).unwrap();
            let got = rule.apply_scalar(b);
            let (best, _) = brute_force(mode, tau, b);
            // compare objective values; ties at the hard boundary admit two minimizers
            assert!(objective(mode, tau, got, b) <= best + 1e-12, "{mode:?} tau {tau} b {b} -> {got}");
        }
    }
}

#[test]
fn soft_also_beats_a_dense_grid() {
    let mut rng = common::rng(21);
    for _ in 0..200 {
        let tau = rng.random_range(0.0..5.0);
        let b = rng.random_range(-10.0..10.0);
        let got = ThresholdRule::new(ThresholdMode::Soft, tau).unwrap().apply_scalar(b);
        let grid_best = (-20_000..=20_000)
            .map(|i| i as f64 * 1e-3)
            .map(|a| objective(ThresholdMode::Soft, tau, a, b))
            .fold(f64::INFINITY, f64::min);
        assert!(objective(ThresholdMode::Soft, tau, got, b) <= grid_best + 1e-12);
    }
}

#[test]
fn vector_form_is_elementwise() {
    let rule = ThresholdRule::new(ThresholdMode::Soft, 1.5).unwrap();
    let b = [-3.0, -1.5, -0.2, 0.0, 1.0, 1.6, 4.0];
    let out = threshold(&rule, &b);
    let want: Vec<f64> = b.iter().map(|&v| rule.apply_scalar(v)).collect();
    assert_eq!(out, want);
}

proptest! {
    #[test]
    fn soft_is_nonexpansive(tau in 0.0f64..10.0, a in -50.0f64..50.0, b in -50.0f64..50.0) {
        let rule = ThresholdRule::new(ThresholdMode::Soft, tau).unwrap();
        prop_assert!((rule.apply_scalar(a) - rule.apply_scalar(b)).abs() <= (a - b).abs() + 1e-12);
    }

    #[test]
    fn both_rules_are_odd(tau in 0.0f64..10.0, b in -50.0f64..50.0, hard in any::<bool>()) {
        let mode = if hard { ThresholdMode::Hard } else { ThresholdMode::Soft };
        let rule = ThresholdRule::new(mode, tau).unwrap();
        prop_assert_eq!(rule.apply_scalar(-b), -rule.apply_scalar(b));
    }

    #[test]
    fn outputs_shrink_toward_zero(tau in 0.0f64..10.0, b in -50.0f64..50.0, hard in any::<bool>()) {
        let mode = if hard { ThresholdMode::Hard } else { ThresholdMode::Soft };
        let out = ThresholdRule::new(mode, tau).unwrap().apply_scalar(b);
        prop_assert!(out.abs() <= b.abs());
        prop_assert!(out == 0.0 || out.signum() == b.signum());
    }
}
