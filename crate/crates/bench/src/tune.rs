//! Coarse logarithmic grid search for the per-scenario defaults.
//!
//! Every search grid has five points spaced by a constant ratio around a
//! center. A wide pass is followed by a narrow pass around the best point.
//! A pass whose best point lies on the grid edge is repeated around that
//! point, a bounded number of times.
//! In IDD-BM3D `tau` and `xi` only enter through `tau * xi`, and the
//! analysis algorithm does not use `xi`; for both `xi` stays at 1 and the
//! search runs over `(tau, gamma)`. The synthesis algorithm searches
//! `(tau, gamma)` at a fixed `xi` and then `xi` alone.

use std::collections::HashMap;
use std::fmt::Write as _;

use bm3d_frames::algorithms::{IddStep, InitConfig};
use bm3d_frames::metrics::isnr;
use bm3d_frames::{AlgoParams, Image, ThresholdMode, WeightMode};

use crate::config::RunParams;
use crate::error::Result;
use crate::experiment::{Algorithm, Setup};
use crate::scenario::Scenario;

pub const GRID_POINTS: usize = 5;

/// `GRID_POINTS` values `center * ratio^k`, `k = -2..=2`.
pub fn log_grid(center: f64, ratio: f64) -> Vec<f64> {
    let half = (GRID_POINTS / 2) as i32;
    (-half..=half).map(|k| center * ratio.powi(k)).collect()
}

/// One evaluated grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct TunePoint {
    pub scenario: u8,
    pub target: String,
    pub values: Vec<(&'static str, f64)>,
    pub isnr: f64,
}

#[derive(Clone, Debug, Default)]
pub struct TuneLog {
    pub points: Vec<TunePoint>,
}

impl TuneLog {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("scenario,target,values,isnr\n");
        for p in &self.points {
            let values: Vec<String> = p.values.iter().map(|(k, v)| format!("{k}={v:.6e}")).collect();
            let _ = writeln!(out, "{},{},{},{:.4}", p.scenario, p.target, values.join(" "), p.isnr);
        }
        out
    }
}

/// Starting point and iteration budget for each tuned configuration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TuneTarget {
    pub algorithm: Algorithm,
    pub mode: ThresholdMode,
    pub weights: WeightMode,
    pub tau: f64,
    pub gamma: f64,
    pub xi: f64,
    pub max_iters: usize,
}

impl TuneTarget {
    pub fn label(&self) -> String {
        format!("{} {} {}", self.algorithm, self.mode, self.weights)
    }
}

/// The five algorithm configurations of the Cameraman comparison table.
pub fn table2_targets() -> Vec<TuneTarget> {
    use Algorithm::*;
    use ThresholdMode::*;
    use WeightMode::*;
    let t = |algorithm, mode, weights, tau, gamma, xi, max_iters| TuneTarget {
        algorithm,
        mode,
        weights,
        tau,
        gamma,
        xi,
        max_iters,
    };
    vec![
        t(Synthesis, Soft, Unit, 1.0, 100.0, 0.1, 40),
        t(Analysis, Soft, Unit, 3e-3, 100.0, 1.0, 60),
        t(Idd, Soft, Unit, 2.0, 30.0, 1.0, 100),
        t(Idd, Soft, Adaptive, 2.0, 30.0, 1.0, 100),
        t(Idd, Hard, Adaptive, 12.5, 15.0, 1.0, 100),
    ]
}

/// Grid ratios of the wide and the narrow pass.
pub const WIDE_RATIO: f64 = 4.0;
pub const NARROW_RATIO: f64 = 1.6;

/// Re-centerings allowed when the best point lies on the edge of a grid.
pub const MAX_SHIFTS: usize = 3;

/// Whether `best` is an end point of `grid`.
fn on_edge(grid: &[f64], best: f64) -> bool {
    grid.first() == Some(&best) || grid.last() == Some(&best)
}

/// Repeats a grid pass re-centered on the best point while that point lies
/// on the grid edge, at most `MAX_SHIFTS` times. `pass` evaluates the grids
/// around a center and returns the best point and whether it is on an edge.
fn follow_edges<P: Copy>(center: P, mut pass: impl FnMut(P) -> (P, bool)) -> P {
    let (mut best, mut edge) = pass(center);
    for _ in 0..MAX_SHIFTS {
        if !edge {
            break;
        }
        let (next, next_edge) = pass(best);
        edge = next_edge;
        best = next;
    }
    best
}

/// Picks the initial-estimate settings maximizing the ISNR of `y_init`.
pub fn tune_init(truth: &Image, scenario: &Scenario, base: InitConfig, seed: u64, log: &mut TuneLog) -> Result<InitConfig> {
    let (h, w) = truth.dims();
    let blur = scenario.blur_for(h, w)?;
    let sigma = scenario.sigma();
    let observed = bm3d_frames::simulate_observation(truth, &blur, bm3d_frames::NoiseSpec::new(sigma, seed)?)?;
    let mut memo: HashMap<[u64; 2], f64> = HashMap::new();
    let mut best = (f64::NEG_INFINITY, base);
    let mut failure = None;
    follow_edges((base.tikhonov, base.threshold_factor), |(t0, f0)| {
        let (tiks, factors) = (log_grid(t0, 10f64.sqrt()), log_grid(f0, 1.25));
        for &tikhonov in &tiks {
            for &threshold_factor in &factors {
                let key = [key_bits(tikhonov), key_bits(threshold_factor)];
                if memo.contains_key(&key) {
                    continue;
                }
                let cfg = InitConfig {
                    tikhonov,
                    threshold_factor,
                    ..base
                };
                let score = match bm3d_frames::algorithms::initial_estimate(&observed, &blur, sigma, &cfg)
                    .and_then(|init| isnr(truth, &observed, &init.image))
                {
                    Ok(v) => v,
                    Err(e) => {
                        failure.get_or_insert(e);
                        f64::NEG_INFINITY
                    }
                };
                memo.insert(key, score);
                log.points.push(TunePoint {
                    scenario: scenario.id,
                    target: "init".into(),
                    values: vec![("tikhonov", tikhonov), ("threshold_factor", threshold_factor)],
                    isnr: score,
                });
                if score > best.0 {
                    best = (score, cfg);
                }
            }
        }
        let b = best.1;
        let edge = on_edge(&tiks, b.tikhonov) || on_edge(&factors, b.threshold_factor);
        ((b.tikhonov, b.threshold_factor), edge)
    });
    match failure {
        Some(e) => Err(e.into()),
        None => Ok(best.1),
    }
}

/// Grid values rounded to 9 significant digits, so re-centered grids hit the
/// memo despite rounding in `center * ratio^k`.
fn key_bits(v: f64) -> u64 {
    format!("{v:.8e}").parse::<f64>().expect("formatted float parses").to_bits()
}

#[derive(Clone, Copy)]
struct Best {
    isnr: f64,
    tau: f64,
    gamma: f64,
    xi: f64,
}

struct Search<'a> {
    setup: &'a mut Setup,
    target: &'a TuneTarget,
    log: &'a mut TuneLog,
    memo: HashMap<[u64; 3], f64>,
    best: Best,
}

impl Search<'_> {
    fn evaluate(&mut self, tau: f64, gamma: f64, xi: f64) {
        let key = [key_bits(tau), key_bits(gamma), key_bits(xi)];
        if self.memo.contains_key(&key) {
            return;
        }
        let params = AlgoParams {
            tau,
            gamma,
            xi,
            mode: self.target.mode,
            weights: self.target.weights,
            max_iters: self.target.max_iters,
            ..AlgoParams::default()
        };
        // a diverging or non-finite run simply loses
        let score = match self.setup.run(self.target.algorithm, &params, IddStep::Merged) {
            Ok(out) if out.result.isnr.is_finite() => out.result.isnr,
            _ => f64::NEG_INFINITY,
        };
        self.memo.insert(key, score);
        self.log.points.push(TunePoint {
            scenario: self.setup.scenario,
            target: self.target.label(),
            values: vec![("tau", tau), ("gamma", gamma), ("xi", xi)],
            isnr: score,
        });
        if score > self.best.isnr {
            self.best = Best { isnr: score, tau, gamma, xi };
        }
    }

    /// `(tau, gamma)` grid around `center`; returns the best point and
    /// whether it lies on the grid edge.
    fn grid_2d(&mut self, center: Best, ratio: f64) -> (Best, bool) {
        let (taus, gammas) = (log_grid(center.tau, ratio), log_grid(center.gamma, ratio));
        for &tau in &taus {
            for &gamma in &gammas {
                self.evaluate(tau, gamma, center.xi);
            }
        }
        let b = self.best;
        (b, on_edge(&taus, b.tau) || on_edge(&gammas, b.gamma))
    }

    fn grid_xi(&mut self, center: Best, ratio: f64) -> (Best, bool) {
        let xis = log_grid(center.xi, ratio);
        for &xi in &xis {
            self.evaluate(center.tau, center.gamma, xi);
        }
        let b = self.best;
        (b, on_edge(&xis, b.xi))
    }
}

/// Grid search for one algorithm configuration on a prepared setup.
pub fn tune_run(setup: &mut Setup, target: &TuneTarget, log: &mut TuneLog) -> RunParams {
    let start = Best {
        isnr: f64::NEG_INFINITY,
        tau: target.tau,
        gamma: target.gamma,
        xi: target.xi,
    };
    let mut search = Search {
        setup,
        target,
        log,
        memo: HashMap::new(),
        best: start,
    };
    let wide = follow_edges(start, |c| search.grid_2d(c, WIDE_RATIO));
    let best = if target.algorithm == Algorithm::Synthesis {
        follow_edges(wide, |c| search.grid_xi(c, WIDE_RATIO))
    } else {
        follow_edges(wide, |c| search.grid_2d(c, NARROW_RATIO))
    };
    RunParams {
        algorithm: target.algorithm,
        mode: target.mode,
        weights: target.weights,
        tau: best.tau,
        gamma: best.gamma,
        xi: best.xi,
        beta: 1.0,
        max_iters: target.max_iters,
        stop_tol: AlgoParams::default().stop_tol,
        tuned_isnr: best.isnr.is_finite().then_some((best.isnr * 1e4).round() / 1e4),
    }
}
