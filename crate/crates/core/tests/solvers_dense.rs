//! Linear solvers and the algorithm subproblems against dense solves.

mod common;

use bm3d_frames::solvers::{analysis_y_step, cg_solve, fft_regularized_solve, synthesis_u_step, CgConfig, LinearMap};
use bm3d_frames::{BlockPos, BlurOperator, Grouping, Image};
use common::*;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

fn dense_solve(m: DMatrix<f64>, rhs: &DVector<f64>) -> DVector<f64> {
    m.cholesky().expect("system is SPD").solve(rhs)
}

fn rel(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);
    max_abs_diff(a, b) / scale
}

fn tight_cfg() -> CgConfig {
    CgConfig {
        max_iters: 2000,
        rel_tol: 1e-12,
        abs_tol: 1e-14,
    }
}

#[test]
fn fft_solve_matches_dense() {
    let mut rng = rng(30);
    for &(h, w) in &[(8, 8), (16, 16), (5, 12), (11, 7)] {
        for _ in 0..3 {
            let (blur, a) = random_blur(&mut rng, h, w);
            let c = rng.random_range(0.1..10.0);
            let d = 10f64.powf(rng.random_range(-3.0..1.0));
            let rhs = random_image(&mut rng, h, w);
            let n = h * w;
            let m = a.transpose() * &a * c + DMatrix::identity(n, n) * d;
            let want = dense_solve(m, &to_dvec(&rhs));
            let got = fft_regularized_solve(&blur, &rhs, c, d).unwrap();
            assert!(rel(got.as_slice(), want.as_slice()) < 1e-9, "{h}x{w} c {c} d {d}");
        }
    }
}

#[test]
fn cg_matches_dense_on_random_spd() {
    let mut rng = rng(31);
    for n in [5, 20, 64] {
        let b = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let q = b.transpose() * &b + DMatrix::identity(n, n) * 0.5;
        let rhs = DVector::from_fn(n, |_, _| rng.random_range(-10.0..10.0));
        let want = dense_solve(q.clone(), &rhs);
        let map = LinearMap::new(n, |x: &[f64]| (&q * DVector::from_column_slice(x)).as_slice().to_vec());
        let out = cg_solve(&map, rhs.as_slice(), &vec![0.0; n], &tight_cfg()).unwrap();
        assert!(out.converged);
        assert!(rel(&out.x, want.as_slice()) < 1e-6, "n = {n}");
    }
}

#[test]
fn cg_residual_contract() {
    let mut rng = rng(32);
    let (h, w) = (12, 12);
    let (blur, _) = random_blur(&mut rng, h, w);
    let frame = random_frame(&mut rng, h, w, false);
    let z = random_image(&mut rng, h, w);
    let m = frame.spectrum_len();
    let omega: Vec<f64> = (0..m).map(|_| rng.random_range(-20.0..20.0)).collect();
    let lambda = vec![0.0; m];
    let cfg = CgConfig::default();
    let out = analysis_y_step(&frame, &blur, &z, &omega, &lambda, 2.0, 5.0, &Image::zeros(h, w), &cfg).unwrap();
    assert!(out.converged);

    // recompute the residual from the returned iterate
    let y = Image::from_vec(h, w, out.x.clone()).unwrap();
    let ata = blur.apply_adjoint(&blur.apply(&y).unwrap()).unwrap();
    let cov = frame.coverage().counts();
    let prior = frame.analysis_adjoint(&omega).unwrap();
    let data = blur.apply_adjoint(&z).unwrap();
    let mut rr = 0.0;
    let mut bb = 0.0;
    for i in 0..h * w {
        let lhs = ata.as_slice()[i] / 4.0 + cov.as_slice()[i] * y.as_slice()[i] / 5.0;
        let rhs = data.as_slice()[i] / 4.0 + prior.as_slice()[i] / 5.0;
        rr += (lhs - rhs).powi(2);
        bb += rhs * rhs;
    }
    let target = (cfg.rel_tol * bb.sqrt()).max(cfg.abs_tol);
    assert!(out.residual <= target);
    assert!(rr.sqrt() <= target * (1.0 + 1e-9), "true residual {} vs target {target}", rr.sqrt());
    assert!((out.residual - rr.sqrt()).abs() <= 1e-9 * bb.sqrt());

    let hist = &out.residual_history;
    assert_eq!(hist.len(), out.iterations + 1);
    assert_eq!(*hist.last().unwrap(), out.residual);
}

/// A recurrence that drifts is caught by the final true-residual check.
#[test]
fn cg_reports_true_residual_on_ill_conditioned_systems() {
    let mut rng = rng(33);
    let n = 60;
    // eigenvalues spread over 12 decades
    let q = {
        let g = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let qr = g.qr().q();
        let d = DMatrix::from_diagonal(&DVector::from_fn(n, |i, _| 10f64.powf(12.0 * i as f64 / (n - 1) as f64)));
        &qr * d * qr.transpose()
    };
    let b = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    let map = LinearMap::new(n, |x: &[f64]| (&q * DVector::from_column_slice(x)).as_slice().to_vec());
    let cfg = CgConfig {
        rel_tol: 1e-10,
        max_iters: 5000,
        ..CgConfig::default()
    };
    let out = cg_solve(&map, b.as_slice(), &vec![0.0; n], &cfg).unwrap();
    let true_res = (&q * DVector::from_column_slice(&out.x) - &b).norm();
    assert!((out.residual - true_res).abs() <= 1e-6 * true_res.max(1e-300) + 1e-12 * b.norm());
    assert_eq!(out.converged, true_res <= (cfg.rel_tol * b.norm()).max(cfg.abs_tol));
}

fn dense_y_step(
    a: &DMatrix<f64>,
    phi: &DMatrix<f64>,
    z: &Image,
    omega: &[f64],
    lambda: &[f64],
    sigma: f64,
    gamma: f64,
) -> DVector<f64> {
    let s2 = sigma * sigma;
    let sum = DVector::from_iterator(omega.len(), omega.iter().zip(lambda).map(|(w, l)| w + l));
    let m = a.transpose() * a / s2 + phi.transpose() * phi / gamma;
    let rhs = a.transpose() * to_dvec(z) / s2 + phi.transpose() * sum / gamma;
    dense_solve(m, &rhs)
}

#[test]
fn analysis_y_step_matches_dense() {
    let mut rng = rng(33);
    for &(h, w) in &[(8, 8), (16, 16), (8, 8), (16, 16)] {
        let (blur, a) = random_blur(&mut rng, h, w);
        let frame = random_frame(&mut rng, h, w, false);
        let phi = dense_phi(frame.grouping());
        let z = random_image(&mut rng, h, w);
        let m = frame.spectrum_len();
        let omega: Vec<f64> = (0..m).map(|_| rng.random_range(-30.0..30.0)).collect();
        let lambda: Vec<f64> = (0..m).map(|_| rng.random_range(-3.0..3.0)).collect();
        let sigma = rng.random_range(0.5..5.0);
        let gamma = 10f64.powf(rng.random_range(-1.0..2.0));
        let want = dense_y_step(&a, &phi, &z, &omega, &lambda, sigma, gamma);
        let out = analysis_y_step(&frame, &blur, &z, &omega, &lambda, sigma, gamma, &Image::zeros(h, w), &tight_cfg()).unwrap();
        assert!(rel(&out.x, want.as_slice()) < 1e-6, "{h}x{w}");
    }
}

/// With uniform coverage `alpha` the CG system is `(A^T A / s^2 + alpha / gamma) y = b`,
/// which the FFT solver handles exactly.
#[test]
fn uniform_coverage_y_step_equals_fft_solve() {
    let mut rng = rng(34);
    let (h, w) = (8, 12);
    let tiles: Vec<BlockPos> = (0..w / 2).flat_map(|c| (0..h / 2).map(move |r| BlockPos::new(2 * r, 2 * c))).collect();
    for alpha in [1usize, 2] {
        // each tile appears in `alpha` single-block groups
        let groups: Vec<Vec<BlockPos>> = (0..alpha).flat_map(|_| tiles.iter().map(|p| vec![*p])).collect();
        let frame = frame_for(Grouping::from_groups(h, w, 2, groups).unwrap(), None);
        assert_eq!(frame.coverage().min(), alpha as f64);
        assert_eq!(frame.coverage().max(), alpha as f64);

        let (blur, _) = random_blur(&mut rng, h, w);
        let z = random_image(&mut rng, h, w);
        let m = frame.spectrum_len();
        let omega: Vec<f64> = (0..m).map(|_| rng.random_range(-30.0..30.0)).collect();
        let lambda: Vec<f64> = (0..m).map(|_| rng.random_range(-3.0..3.0)).collect();
        let (sigma, gamma) = (1.5, 4.0);
        let out = analysis_y_step(&frame, &blur, &z, &omega, &lambda, sigma, gamma, &Image::zeros(h, w), &tight_cfg()).unwrap();

        let sum: Vec<f64> = omega.iter().zip(&lambda).map(|(a, b)| a + b).collect();
        let prior = frame.analysis_adjoint(&sum).unwrap();
        let data = blur.apply_adjoint(&z).unwrap();
        let s2 = sigma * sigma;
        let rhs = Image::from_vec(
            h,
            w,
            data.as_slice().iter().zip(prior.as_slice()).map(|(d, p)| d / s2 + p / gamma).collect(),
        )
        .unwrap();
        let fft = fft_regularized_solve(&blur, &rhs, 1.0 / s2, alpha as f64 / gamma).unwrap();
        assert!(rel(&out.x, fft.as_slice()) < 1e-8, "alpha {alpha}");
    }
}

fn small_synthesis_problem(seed: u64) -> (bm3d_frames::FramePair, Image, Vec<f64>, Image) {
    let mut rng = rng(seed);
    let (h, w) = (6, 6);
    let grouping = random_grouping(&mut rng, h, w, 2, 2, 2);
    let weights = random_weights(&mut rng, grouping.len());
    let frame = frame_for(grouping, Some(weights));
    let y = random_image(&mut rng, h, w);
    let omega: Vec<f64> = (0..frame.spectrum_len()).map(|_| rng.random_range(-30.0..30.0)).collect();
    let lambda = Image::from_fn(h, w, |_, _| rng.random_range(-2.0..2.0));
    (frame, y, omega, lambda)
}

#[test]
fn synthesis_u_step_matches_dense() {
    for (seed, gamma, xi) in [(40, 1.0, 1.0), (41, 0.3, 5.0), (42, 20.0, 0.05)] {
        let (frame, y, omega, lambda) = small_synthesis_problem(seed);
        let phi = dense_phi(frame.grouping());
        let psi = dense_psi(frame.grouping(), &phi, frame.weights());
        let m = frame.spectrum_len();
        let lhs = psi.transpose() * &psi / gamma + DMatrix::identity(m, m) / xi;
        let rhs = psi.transpose() * (to_dvec(&y) + to_dvec(&lambda)) / gamma + DVector::from_column_slice(&omega) / xi;
        let want = dense_solve(lhs, &rhs);
        let out = synthesis_u_step(&frame, &y, &omega, &lambda, gamma, xi, &vec![0.0; m], &tight_cfg()).unwrap();
        assert!(rel(&out.x, want.as_slice()) < 1e-6, "gamma {gamma} xi {xi}");
    }
}

#[test]
fn synthesis_u_step_small_xi_returns_omega() {
    let (frame, y, omega, lambda) = small_synthesis_problem(43);
    let m = frame.spectrum_len();
    let out = synthesis_u_step(&frame, &y, &omega, &lambda, 1.0, 1e-8, &vec![0.0; m], &tight_cfg()).unwrap();
    assert!(rel(&out.x, &omega) < 1e-6);
}

#[test]
fn synthesis_u_step_consistent_plug_in_is_a_fixed_point() {
    let (frame, _, omega, _) = small_synthesis_problem(44);
    let (h, w) = frame.dims();
    let y = frame.synthesis(&omega).unwrap();
    let zero = Image::zeros(h, w);
    for xi in [0.1, 1.0, 30.0] {
        let out = synthesis_u_step(&frame, &y, &omega, &zero, 2.0, xi, &vec![0.0; omega.len()], &tight_cfg()).unwrap();
        assert!(rel(&out.x, &omega) < 1e-6, "xi {xi}");
    }
}

/// The CG operators are symmetric positive definite, checked on random pairs.
#[test]
fn subproblem_operators_are_spd() {
    let mut rng = rng(45);
    let (h, w) = (9, 10);
    let (blur, _) = random_blur(&mut rng, h, w);
    let frame = random_frame(&mut rng, h, w, true);
    let cov = frame.coverage().counts().clone();
    let y_op = |x: &Image| -> Vec<f64> {
        let ata = blur.apply_adjoint(&blur.apply(x).unwrap()).unwrap();
        ata.as_slice().iter().zip(x.as_slice()).zip(cov.as_slice()).map(|((a, v), c)| a / 4.0 + c * v / 3.0).collect()
    };
    let u_op = |u: &[f64]| -> Vec<f64> {
        let back = frame.synthesis_adjoint(&frame.synthesis(u).unwrap()).unwrap();
        back.iter().zip(u).map(|(b, v)| b / 3.0 + v / 0.5).collect()
    };
    for _ in 0..10 {
        let x1 = random_image(&mut rng, h, w);
        let x2 = random_image(&mut rng, h, w);
        assert!(dot(&y_op(&x1), x1.as_slice()) > 0.0);
        let (a, b) = (dot(&y_op(&x1), x2.as_slice()), dot(x1.as_slice(), &y_op(&x2)));
        assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));

        let m = frame.spectrum_len();
        let u1: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        let u2: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        assert!(dot(&u_op(&u1), &u1) > 0.0);
        let (a, b) = (dot(&u_op(&u1), &u2), dot(&u1, &u_op(&u2)));
        assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
    }
}

#[test]
fn identity_blur_fft_solve_is_scaling() {
    let blur = BlurOperator::identity(5, 6);
    let rhs = Image::from_fn(5, 6, |r, c| (r * 6 + c) as f64);
    let out = fft_regularized_solve(&blur, &rhs, 2.0, 3.0).unwrap();
    assert!(max_abs_diff(out.as_slice(), &rhs.map(|v| v / 5.0).into_vec()) < 1e-12);
}

#[test]
fn fft_solve_residual_is_small() {
    let mut rng = rng(46);
    for _ in 0..10 {
        let (h, w) = (rng.random_range(4..=20), rng.random_range(4..=20));
        let (blur, _) = random_blur(&mut rng, h, w);
        let rhs = random_image(&mut rng, h, w);
        let (c, d) = (rng.random_range(0.1..10.0), 10f64.powf(rng.random_range(-4.0..1.0)));
        let y = fft_regularized_solve(&blur, &rhs, c, d).unwrap();
        let ata = blur.apply_adjoint(&blur.apply(&y).unwrap()).unwrap();
        let res: Vec<f64> = ata.as_slice().iter().zip(y.as_slice()).map(|(a, v)| c * a + d * v).collect();
        let rhs_inf = rhs.as_slice().iter().map(|v| v.abs()).fold(0.0, f64::max);
        assert!(max_abs_diff(&res, rhs.as_slice()) < 1e-8 * rhs_inf);
    }
}

#[test]
fn analysis_y_step_consistent_plug_in() {
    let mut rng = rng(47);
    let (h, w) = (10, 9);
    let (blur, _) = random_blur(&mut rng, h, w);
    let frame = random_frame(&mut rng, h, w, false);
    let y_star = random_image(&mut rng, h, w);
    let z = blur.apply(&y_star).unwrap();
    let omega = frame.analysis(&y_star).unwrap();
    let lambda = vec![0.0; omega.len()];
    for gamma in [0.01, 1.0, 100.0] {
        let out = analysis_y_step(&frame, &blur, &z, &omega, &lambda, 1.3, gamma, &Image::zeros(h, w), &tight_cfg()).unwrap();
        assert!(rel(&out.x, y_star.as_slice()) < 1e-8, "gamma {gamma}");
    }
}
