//! Linear solves used inside the outer iterations.
//!
//! Systems of the form `(c A^T A + d I) y = b` are diagonal in the Fourier
//! domain. The analysis `y`-step and the synthesis `u`-step are not, and go
//! through matrix-free conjugate gradients.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::blur::BlurOperator;
use crate::error::{mismatch, Error, Result};
use crate::frames::FramePair;
use crate::image::Image;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CgConfig {
    pub max_iters: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl Default for CgConfig {
    fn default() -> Self {
        Self {
            max_iters: 200,
            rel_tol: 1e-6,
            abs_tol: 1e-10,
        }
    }
}

impl CgConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 || !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) {
            return Err(Error::InvalidParameter(format!("invalid CG settings {self:?}")));
        }
        Ok(())
    }
}

type ApplyFn<'a> = Box<dyn Fn(&[f64]) -> Vec<f64> + Sync + 'a>;

/// A symmetric positive definite operator given by its action.
pub struct LinearMap<'a> {
    dim: usize,
    apply: ApplyFn<'a>,
}

impl<'a> LinearMap<'a> {
    pub fn new(dim: usize, apply: impl Fn(&[f64]) -> Vec<f64> + Sync + 'a) -> Self {
        Self {
            dim,
            apply: Box::new(apply),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (self.apply)(x)
    }
}

#[derive(Clone, Debug)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// `||L x - b||_2` at exit.
    pub residual: f64,
    /// Residual norm after every iteration, starting with the initial one.
    /// The last entry is the true residual.
    pub residual_history: Vec<f64>,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Conjugate gradients from `x0`. Hitting `max_iters` is reported through
/// `converged`, not as an error.
pub fn cg_solve(map: &LinearMap<'_>, rhs: &[f64], x0: &[f64], cfg: &CgConfig) -> Result<CgOutcome> {
    cfg.validate()?;
    let n = map.dim();
    if rhs.len() != n {
        return Err(mismatch(n, rhs.len()));
    }
    if x0.len() != n {
        return Err(mismatch(n, x0.len()));
    }
    let target = (cfg.rel_tol * dot(rhs, rhs).sqrt()).max(cfg.abs_tol);

    let mut x = x0.to_vec();
    let lx = map.apply(&x);
    let mut r: Vec<f64> = rhs.iter().zip(&lx).map(|(b, l)| b - l).collect();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let mut history = vec![rr.sqrt()];
    let mut iterations = 0;

    loop {
        while rr.sqrt() > target && iterations < cfg.max_iters {
            let lp = map.apply(&p);
            let plp = dot(&p, &lp);
            if !plp.is_finite() || !rr.is_finite() {
                return Err(Error::SolverDivergence {
                    iterations,
                    reason: "non-finite value".into(),
                });
            }
            if plp <= 0.0 {
                return Err(Error::SolverDivergence {
                    iterations,
                    reason: format!("operator is not positive definite (p^T L p = {plp:e})"),
                });
            }
            let alpha = rr / plp;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * lp[i];
            }
            let rr_next = dot(&r, &r);
            let beta = rr_next / rr;
            for i in 0..n {
                p[i] = r[i] + beta * p[i];
            }
            rr = rr_next;
            iterations += 1;
            history.push(rr.sqrt());
        }
        // the recurrence can drift from the true residual; check it and
        // restart from the true residual if it is still too large
        let lx = map.apply(&x);
        for i in 0..n {
            r[i] = rhs[i] - lx[i];
        }
        rr = dot(&r, &r);
        *history.last_mut().expect("history starts non-empty") = rr.sqrt();
        if rr.sqrt() <= target || iterations >= cfg.max_iters || !rr.is_finite() {
            break;
        }
        p.copy_from_slice(&r);
    }
    if !rr.is_finite() {
        return Err(Error::SolverDivergence {
            iterations,
            reason: "non-finite residual".into(),
        });
    }
    Ok(CgOutcome {
        x,
        iterations,
        residual: rr.sqrt(),
        residual_history: history,
        converged: rr.sqrt() <= target,
    })
}

/// Solves `(c A^T A + d I) y = rhs` by per-frequency division.
pub fn fft_regularized_solve(blur: &BlurOperator, rhs: &Image, c: f64, d: f64) -> Result<Image> {
    if !(c > 0.0 && d > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "regularized inverse needs c, d > 0, got c = {c}, d = {d}"
        )));
    }
    if rhs.dims() != blur.dims() {
        let (h, w) = blur.dims();
        return Err(mismatch(format!("{h}x{w}"), format!("{}x{}", rhs.height(), rhs.width())));
    }
    let fft = blur.fft();
    let mut spec = fft.forward_real(rhs.as_slice());
    for (s, h) in spec.iter_mut().zip(blur.freq_response()) {
        let denom = c * h.norm_sqr() + d;
        assert!(denom > 0.0);
        *s /= denom;
    }
    Image::from_vec(rhs.height(), rhs.width(), fft.inverse_real(spec))
}

/// Precomputed solver for `(A^T A / sigma^2 + I / gamma) y = A^T z / sigma^2 + v / gamma`.
///
/// Multiplying through by `sigma^2` gives the Fourier-domain form
/// `Y = (conj(H) Z + rho V) / (|H|^2 + rho)` with `rho = sigma^2 / gamma`.
#[derive(Clone, Debug)]
pub struct RegularizedInverse<'a> {
    blur: &'a BlurOperator,
    rho: f64,
    data_term: Vec<Complex64>,
}

impl<'a> RegularizedInverse<'a> {
    pub fn new(blur: &'a BlurOperator, z: &Image, sigma: f64, gamma: f64) -> Result<Self> {
        if !(sigma > 0.0 && gamma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sigma and gamma must be positive, got {sigma}, {gamma}"
            )));
        }
        if z.dims() != blur.dims() {
            let (h, w) = blur.dims();
            return Err(mismatch(format!("{h}x{w}"), format!("{}x{}", z.height(), z.width())));
        }
        let mut data_term = blur.fft().forward_real(z.as_slice());
        for (s, h) in data_term.iter_mut().zip(blur.freq_response()) {
            *s *= h.conj();
        }
        Ok(Self {
            blur,
            rho: sigma * sigma / gamma,
            data_term,
        })
    }

    pub fn solve(&self, prior: &Image) -> Result<Image> {
        if prior.dims() != self.blur.dims() {
            let (h, w) = self.blur.dims();
            return Err(mismatch(format!("{h}x{w}"), format!("{}x{}", prior.height(), prior.width())));
        }
        let fft = self.blur.fft();
        let mut spec = fft.forward_real(prior.as_slice());
        for ((s, d), h) in spec.iter_mut().zip(&self.data_term).zip(self.blur.freq_response()) {
            *s = (d + self.rho * *s) / (h.norm_sqr() + self.rho);
        }
        Image::from_vec(prior.height(), prior.width(), fft.inverse_real(spec))
    }
}

fn image_like(template: (usize, usize), data: Vec<f64>) -> Image {
    Image::from_vec(template.0, template.1, data).expect("sizes match")
}

/// Analysis `y`-step: solves
/// `(A^T A / sigma^2 + Phi^T Phi / gamma) y = A^T z / sigma^2 + Phi^T (omega + lambda) / gamma`
/// by CG, with `Phi^T Phi` applied as the coverage diagonal.
#[allow(clippy::too_many_arguments)]
pub fn analysis_y_step(
    frame: &FramePair,
    blur: &BlurOperator,
    z: &Image,
    omega: &[f64],
    lambda: &[f64],
    sigma: f64,
    gamma: f64,
    x0: &Image,
    cfg: &CgConfig,
) -> Result<CgOutcome> {
    if !(sigma > 0.0 && gamma > 0.0) {
        return Err(Error::InvalidParameter("sigma and gamma must be positive".into()));
    }
    if omega.len() != lambda.len() {
        return Err(mismatch(omega.len(), lambda.len()));
    }
    let dims = frame.dims();
    let inv_s2 = 1.0 / (sigma * sigma);
    let inv_g = 1.0 / gamma;
    let sum: Vec<f64> = omega.iter().zip(lambda).map(|(w, l)| w + l).collect();
    let prior = frame.analysis_adjoint(&sum)?;
    let data = blur.apply_adjoint(z)?;
    let rhs: Vec<f64> = data
        .as_slice()
        .iter()
        .zip(prior.as_slice())
        .map(|(d, p)| inv_s2 * d + inv_g * p)
        .collect();
    let coverage = frame.coverage().counts().as_slice();
    let map = LinearMap::new(frame.image_len(), |x: &[f64]| {
        let img = image_like(dims, x.to_vec());
        let ata = blur.apply_adjoint(&blur.apply(&img).expect("dims checked")).expect("dims checked");
        ata.as_slice()
            .iter()
            .zip(x)
            .zip(coverage)
            .map(|((a, xi), c)| inv_s2 * a + inv_g * c * xi)
            .collect()
    });
    cg_solve(&map, &rhs, x0.as_slice(), cfg)
}

/// Synthesis `u`-step: solves
/// `(Psi^T Psi / gamma + I / xi) u = Psi^T (y + lambda) / gamma + omega / xi` by CG.
#[allow(clippy::too_many_arguments)]
pub fn synthesis_u_step(
    frame: &FramePair,
    y: &Image,
    omega: &[f64],
    lambda: &Image,
    gamma: f64,
    xi: f64,
    u0: &[f64],
    cfg: &CgConfig,
) -> Result<CgOutcome> {
    if !(gamma > 0.0 && xi > 0.0) {
        return Err(Error::InvalidParameter("gamma and xi must be positive".into()));
    }
    y.check_same_dims(lambda)?;
    let inv_g = 1.0 / gamma;
    let inv_x = 1.0 / xi;
    let sum = image_like(y.dims(), y.as_slice().iter().zip(lambda.as_slice()).map(|(a, b)| a + b).collect());
    let psi_t = frame.synthesis_adjoint(&sum)?;
    if omega.len() != psi_t.len() {
        return Err(mismatch(psi_t.len(), omega.len()));
    }
    let rhs: Vec<f64> = psi_t.iter().zip(omega).map(|(p, w)| inv_g * p + inv_x * w).collect();
    let map = LinearMap::new(frame.spectrum_len(), |u: &[f64]| {
        let img = frame.synthesis(u).expect("sizes checked");
        let back = frame.synthesis_adjoint(&img).expect("sizes checked");
        back.iter().zip(u).map(|(b, ui)| inv_g * b + inv_x * ui).collect()
    });
    cg_solve(&map, &rhs, u0, cfg)
}
