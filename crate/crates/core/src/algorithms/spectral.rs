use nalgebra::{Complex, DMatrix, Schur};

use crate::blur::BlurOperator;
use crate::error::{Error, Result};
use crate::frames::FramePair;
use crate::image::Image;

/// Largest image (in pixels) for which operators are materialized densely.
pub const DENSE_LIMIT: usize = 64;
const SPECTRUM_LIMIT: usize = 4096;
/// Eigenvalues below this magnitude count as zero.
const ZERO_EIG: f64 = 1e-8;
/// Relative deflation threshold of the QR iteration. Machine epsilon can
/// stall it on clustered eigenvalues; the resulting error stays far below
/// `ZERO_EIG`.
const SCHUR_EPS: f64 = 1e-13;

/// How the eigenvalues of `Phi M^-1 Psi` were obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EigenMethod {
    /// Real Schur form of the full `M x M` matrix.
    Full,
    /// The QR iteration on the full matrix stalled (it can on the highly
    /// degenerate spectra these maps have). `Phi X` and `X Phi`, with
    /// `X = M^-1 Psi`, share their nonzero eigenvalues, so the spectrum is the
    /// `N` eigenvalues of `X Phi` plus `M - N` zeros.
    Reduced,
}

/// Eigen-structure of `Phi M^-1 Psi` with `M = (gamma / s^2) A^T A + I`.
#[derive(Clone, Debug)]
pub struct SpectralReport {
    pub method: EigenMethod,
    /// Largest eigenvalue magnitude of `Phi M^-1 Psi`.
    pub spectral_radius: f64,
    /// Real parts of all eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// Largest imaginary part over all eigenvalues.
    pub max_imaginary: f64,
    /// Eigenvalues with magnitude above the zero cutoff, ascending.
    pub nonzero: Vec<f64>,
    pub zero_count: usize,
    /// Eigenvalues of `M^-1`, ascending.
    pub m_inv_eigenvalues: Vec<f64>,
}

impl SpectralReport {
    /// All eigenvalues real and within `[-tol, 1 + tol]`.
    pub fn is_nonexpansive(&self, tol: f64) -> bool {
        self.max_imaginary <= tol && self.eigenvalues.iter().all(|&e| e >= -tol && e <= 1.0 + tol)
    }

    /// Largest pairwise gap between the sorted nonzero eigenvalues and the
    /// eigenvalues of `M^-1`; infinite if the counts differ.
    pub fn max_mismatch(&self) -> f64 {
        if self.nonzero.len() != self.m_inv_eigenvalues.len() {
            return f64::INFINITY;
        }
        self.nonzero
            .iter()
            .zip(&self.m_inv_eigenvalues)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

fn dense_columns(n_in: usize, n_out: usize, apply: impl Fn(usize) -> Result<Vec<f64>>) -> Result<DMatrix<f64>> {
    let mut m = DMatrix::zeros(n_out, n_in);
    for j in 0..n_in {
        let col = apply(j)?;
        m.column_mut(j).copy_from_slice(&col);
    }
    Ok(m)
}

/// Materializes `Phi M^-1 Psi` and checks that it is nonexpansive.
///
/// Requires equal group weights and at most [`DENSE_LIMIT`] pixels. Returns an
/// error if any eigenvalue is complex or outside `[0, 1]` beyond `1e-8`.
pub fn check_nonexpansive_map(frame: &FramePair, blur: &BlurOperator, sigma: f64, gamma: f64) -> Result<SpectralReport> {
    if !frame.has_equal_weights() {
        return Err(Error::InvalidFrame("spectral check requires equal group weights".into()));
    }
    if !(sigma > 0.0 && gamma > 0.0) {
        return Err(Error::InvalidParameter("sigma and gamma must be positive".into()));
    }
    let n = frame.image_len();
    let m = frame.spectrum_len();
    if n > DENSE_LIMIT {
        return Err(Error::TooLarge { size: n, limit: DENSE_LIMIT });
    }
    if m > SPECTRUM_LIMIT {
        return Err(Error::TooLarge { size: m, limit: SPECTRUM_LIMIT });
    }
    if blur.dims() != frame.dims() {
        return Err(Error::InvalidFrame("blur and frame sizes differ".into()));
    }
    let (h, w) = frame.dims();
    let unit_image = |j: usize| {
        let mut img = Image::zeros(h, w);
        img.as_mut_slice()[j] = 1.0;
        img
    };

    let a = dense_columns(n, n, |j| Ok(blur.apply(&unit_image(j))?.into_vec()))?;
    let scale = gamma / (sigma * sigma);
    let m_mat = a.transpose() * &a * scale + DMatrix::identity(n, n);
    let m_inv = m_mat
        .cholesky()
        .ok_or_else(|| Error::InvalidParameter("M is not positive definite".into()))?
        .inverse();

    let phi = dense_columns(n, m, |j| frame.analysis(&unit_image(j)))?;
    let psi = dense_columns(m, n, |k| {
        let mut e = vec![0.0; m];
        e[k] = 1.0;
        Ok(frame.synthesis(&e)?.into_vec())
    })?;
    let x = &m_inv * &psi;
    let (method, eigs) = match Schur::try_new(&phi * &x, SCHUR_EPS, 100 * m) {
        Some(schur) => (EigenMethod::Full, schur.complex_eigenvalues().as_slice().to_vec()),
        None => {
            let schur = Schur::try_new(&x * &phi, SCHUR_EPS, 100 * n)
                .ok_or_else(|| Error::InvalidFrame("eigenvalue iteration did not converge".into()))?;
            let mut eigs = schur.complex_eigenvalues().as_slice().to_vec();
            eigs.resize(m, Complex::new(0.0, 0.0));
            (EigenMethod::Reduced, eigs)
        }
    };
    let max_imaginary = eigs.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
    let spectral_radius = eigs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut eigenvalues: Vec<f64> = eigs.iter().map(|c| c.re).collect();
    eigenvalues.sort_by(f64::total_cmp);
    let nonzero: Vec<f64> = eigenvalues.iter().copied().filter(|e| e.abs() > ZERO_EIG).collect();
    let zero_count = eigenvalues.len() - nonzero.len();

    let mut m_inv_eigenvalues: Vec<f64> = m_inv.symmetric_eigenvalues().iter().copied().collect();
    m_inv_eigenvalues.sort_by(f64::total_cmp);

    let report = SpectralReport {
        method,
        spectral_radius,
        eigenvalues,
        max_imaginary,
        nonzero,
        zero_count,
        m_inv_eigenvalues,
    };
    if !report.is_nonexpansive(1e-8) {
        return Err(Error::InvalidFrame(format!(
            "Phi M^-1 Psi is not nonexpansive: radius {}, max imaginary part {}",
            report.spectral_radius, report.max_imaginary
        )));
    }
    Ok(report)
}
