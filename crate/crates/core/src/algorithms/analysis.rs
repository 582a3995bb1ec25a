use crate::error::{Error, Result};
use crate::frames::FramePair;
use crate::image::Image;
use crate::shrinkage::ThresholdRule;
use crate::solvers::analysis_y_step;

use super::{check_finite, rel_change, AlgoParams, IterationRecord, IterationTrace, Problem};

/// Analysis-based augmented Lagrangian deblurring.
///
/// Starting from `y_0 = init`, `omega_0 = Phi y_0`, `lambda_0 = 0`, repeats
///
/// ```text
/// y      <- solve (A^T A / s^2 + Phi^T Phi / gamma) y = A^T z / s^2 + Phi^T (omega + lambda) / gamma
/// omega  <- Th_{tau gamma}(Phi y - lambda)
/// lambda <- lambda + beta (omega - Phi y)
/// ```
///
/// until the relative image change drops below `stop_tol`.
pub fn analysis_deblur(problem: &Problem<'_>, frame: &FramePair, params: &AlgoParams) -> Result<(Image, IterationTrace)> {
    problem.validate()?;
    params.validate()?;
    if frame.dims() != problem.observed.dims() {
        return Err(Error::InvalidFrame("frame was built for a different image size".into()));
    }
    let rule = ThresholdRule::new(params.mode, params.tau * params.gamma)?;
    let penalty = ThresholdRule::new(params.mode, params.tau)?;

    let mut y = problem.init.clone();
    let mut omega = frame.analysis(&y)?;
    let mut lambda = vec![0.0; omega.len()];
    let mut trace = IterationTrace::default();

    for t in 1..=params.max_iters {
        let step = analysis_y_step(
            frame,
            problem.blur,
            problem.observed,
            &omega,
            &lambda,
            problem.sigma,
            params.gamma,
            &y,
            &params.cg,
        )
        .map_err(|e| match e {
            Error::SolverDivergence { .. } => Error::NonFiniteIterate { algorithm: "analysis", iteration: t },
            other => other,
        })?;
        check_finite("analysis", t, &step.x)?;
        let y_next = Image::from_vec(y.height(), y.width(), step.x)?;
        let phi_y = frame.analysis(&y_next)?;

        for ((w, l), p) in omega.iter_mut().zip(&lambda).zip(&phi_y) {
            *w = rule.apply_scalar(p - l);
        }
        let mut gap = 0.0;
        for ((l, w), p) in lambda.iter_mut().zip(&omega).zip(&phi_y) {
            let d = w - p;
            gap += d * d;
            *l += params.beta * d;
        }
        check_finite("analysis", t, &lambda)?;
        let omega_norm = omega.iter().map(|v| v * v).sum::<f64>().sqrt();

        let change = rel_change(&y_next, &y);
        y = y_next;
        trace.records.push(IterationRecord {
            iteration: t,
            isnr: problem.isnr(&y),
            rel_change: change,
            fidelity: problem.fidelity(&y),
            penalty: penalty.penalty(&omega),
            coupling: if omega_norm > 0.0 { gap.sqrt() / omega_norm } else { gap.sqrt() },
            inner_iterations: step.iterations,
        });
        if change < params.stop_tol {
            break;
        }
    }
    Ok((y, trace))
}
