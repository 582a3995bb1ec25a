use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::FramePair;
use crate::image::Image;
use crate::shrinkage::ThresholdRule;
use crate::solvers::{fft_regularized_solve, RegularizedInverse};

use super::{check_finite, rel_change, AlgoParams, IterationRecord, IterationTrace, Problem};

/// How one IDD-BM3D iteration is evaluated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IddStep {
    /// Single Fourier-domain update with the groupwise
    /// analysis-threshold-synthesis term; the spectrum is never stored.
    #[default]
    Merged,
    /// Explicit regularized inverse followed by explicit spectrum thresholding.
    TwoStep,
}

/// Iterative decoupled deblurring.
///
/// With `y_0 = init` and `omega_0 = Phi y_0`:
///
/// ```text
/// y_{t+1}     = (A^T A / s^2 + I / gamma)^-1 (A^T z / s^2 + Psi omega_t / gamma)
/// omega_{t+1} = Th_{tau xi}(Phi y_{t+1})
/// ```
///
/// The merged form evaluates both steps as
/// `F^-1[(conj(H) F(z) + rho F(Psi Th(Phi y_t))) / (|H|^2 + rho)]`, `rho = s^2 / gamma`.
pub fn idd_bm3d_deblur(
    problem: &Problem<'_>,
    frame: &FramePair,
    params: &AlgoParams,
    step: IddStep,
) -> Result<(Image, IterationTrace)> {
    problem.validate()?;
    params.validate()?;
    if frame.dims() != problem.observed.dims() {
        return Err(Error::InvalidFrame("frame was built for a different image size".into()));
    }
    let rule = ThresholdRule::new(params.mode, params.tau * params.xi)?;
    match step {
        IddStep::Merged => merged(problem, frame, params, &rule),
        IddStep::TwoStep => two_step(problem, frame, params, &rule),
    }
}

fn merged(problem: &Problem<'_>, frame: &FramePair, params: &AlgoParams, rule: &ThresholdRule) -> Result<(Image, IterationTrace)> {
    let inverse = RegularizedInverse::new(problem.blur, problem.observed, problem.sigma, params.gamma)?;
    let mut y = problem.init.clone();
    // Psi omega_0 = Psi Phi y_0 = y_0
    let mut prior = y.clone();
    let mut trace = IterationTrace::default();
    for t in 1..=params.max_iters {
        let y_next = inverse.solve(&prior)?;
        check_finite("idd-bm3d", t, y_next.as_slice())?;
        let (denoised, stats) = frame.denoise(&y_next, rule)?;
        let change = rel_change(&y_next, &y);
        let coupling = rel_change(&denoised, &y_next);
        y = y_next;
        prior = denoised;
        trace.records.push(IterationRecord {
            iteration: t,
            isnr: problem.isnr(&y),
            rel_change: change,
            fidelity: problem.fidelity(&y),
            penalty: stats.penalty / params.xi,
            coupling,
            inner_iterations: 0,
        });
        if change < params.stop_tol {
            break;
        }
    }
    Ok((y, trace))
}

fn two_step(problem: &Problem<'_>, frame: &FramePair, params: &AlgoParams, rule: &ThresholdRule) -> Result<(Image, IterationTrace)> {
    let penalty = ThresholdRule::new(params.mode, params.tau)?;
    let inv_s2 = 1.0 / (problem.sigma * problem.sigma);
    let inv_g = 1.0 / params.gamma;
    let data = problem.blur.apply_adjoint(problem.observed)?;
    let (h, w) = problem.observed.dims();

    let mut y = problem.init.clone();
    let mut omega = frame.analysis(&y)?;
    let mut trace = IterationTrace::default();
    for t in 1..=params.max_iters {
        let psi = frame.synthesis(&omega)?;
        let rhs = Image::from_vec(
            h,
            w,
            data.as_slice().iter().zip(psi.as_slice()).map(|(d, p)| inv_s2 * d + inv_g * p).collect(),
        )?;
        let y_next = fft_regularized_solve(problem.blur, &rhs, inv_s2, inv_g)?;
        check_finite("idd-bm3d", t, y_next.as_slice())?;
        omega = frame.analysis(&y_next)?;
        rule.apply_in_place(&mut omega);
        let change = rel_change(&y_next, &y);
        let coupling = rel_change(&frame.synthesis(&omega)?, &y_next);
        y = y_next;
        trace.records.push(IterationRecord {
            iteration: t,
            isnr: problem.isnr(&y),
            rel_change: change,
            fidelity: problem.fidelity(&y),
            penalty: penalty.penalty(&omega),
            coupling,
            inner_iterations: 0,
        });
        if change < params.stop_tol {
            break;
        }
    }
    Ok((y, trace))
}
