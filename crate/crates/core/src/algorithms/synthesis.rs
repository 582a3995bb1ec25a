use crate::error::{Error, Result};
use crate::frames::FramePair;
use crate::image::Image;
use crate::shrinkage::ThresholdRule;
use crate::solvers::{synthesis_u_step, RegularizedInverse};

use super::{check_finite, rel_change, AlgoParams, IterationRecord, IterationTrace, Problem};

/// Synthesis-based augmented Lagrangian deblurring with a split spectrum `u`.
///
/// Starting from `y_0 = init`, `u_0 = omega_0 = Phi y_0`, `lambda_0 = 0`:
///
/// ```text
/// y_{t+1}      = solve (A^T A / s^2 + I / gamma) y = A^T z / s^2 + (Psi u_t - lambda_t) / gamma
/// u_{t+1}      = solve (Psi^T Psi / gamma + I / xi) u = Psi^T (y_t + lambda_t) / gamma + omega_t / xi
/// omega_{t+1}  = Th_{tau xi}(u_{t+1})
/// lambda_{t+1} = lambda_t + beta (y_{t+1} - Psi u_{t+1})
/// ```
///
/// The `u`-update reads the previous image `y_t` and the current spectrum
/// `omega_t`, so the `y` and `u` solves of one iteration are independent.
pub fn synthesis_deblur(problem: &Problem<'_>, frame: &FramePair, params: &AlgoParams) -> Result<(Image, IterationTrace)> {
    problem.validate()?;
    params.validate()?;
    if frame.dims() != problem.observed.dims() {
        return Err(Error::InvalidFrame("frame was built for a different image size".into()));
    }
    let rule = ThresholdRule::new(params.mode, params.tau * params.xi)?;
    let penalty = ThresholdRule::new(params.mode, params.tau)?;
    let inverse = RegularizedInverse::new(problem.blur, problem.observed, problem.sigma, params.gamma)?;
    let (h, w) = problem.observed.dims();

    let mut y = problem.init.clone();
    let mut omega = frame.analysis(&y)?;
    let mut u = omega.clone();
    let mut psi_u = frame.synthesis(&u)?;
    let mut lambda = Image::zeros(h, w);
    let mut trace = IterationTrace::default();

    for t in 1..=params.max_iters {
        let prior = Image::from_vec(
            h,
            w,
            psi_u.as_slice().iter().zip(lambda.as_slice()).map(|(p, l)| p - l).collect(),
        )?;
        let y_next = inverse.solve(&prior)?;
        check_finite("synthesis", t, y_next.as_slice())?;

        let step = synthesis_u_step(frame, &y, &omega, &lambda, params.gamma, params.xi, &u, &params.cg).map_err(|e| match e {
            Error::SolverDivergence { .. } => Error::NonFiniteIterate { algorithm: "synthesis", iteration: t },
            other => other,
        })?;
        u = step.x;
        check_finite("synthesis", t, &u)?;
        omega = u.iter().map(|&v| rule.apply_scalar(v)).collect();
        psi_u = frame.synthesis(&u)?;

        let mut gap = 0.0;
        for ((l, yv), p) in lambda.as_mut_slice().iter_mut().zip(y_next.as_slice()).zip(psi_u.as_slice()) {
            let d = yv - p;
            gap += d * d;
            *l += params.beta * d;
        }
        check_finite("synthesis", t, lambda.as_slice())?;

        let change = rel_change(&y_next, &y);
        y = y_next;
        let y_norm = y.norm_sq().sqrt();
        trace.records.push(IterationRecord {
            iteration: t,
            isnr: problem.isnr(&y),
            rel_change: change,
            fidelity: problem.fidelity(&y),
            penalty: penalty.penalty(&omega),
            coupling: if y_norm > 0.0 { gap.sqrt() / y_norm } else { gap.sqrt() },
            inner_iterations: step.iterations,
        });
        if change < params.stop_tol {
            break;
        }
    }
    Ok((y, trace))
}
