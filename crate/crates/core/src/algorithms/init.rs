use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::blur::BlurOperator;
use crate::error::{Error, Result};
use crate::frames::FramePair;
use crate::grouping::{block_match, BlockGeometry, Grouping};
use crate::image::Image;
use crate::shrinkage::{ThresholdMode, ThresholdRule};
use crate::solvers::fft_regularized_solve;
use crate::transform::{DstKind, GroupTransform};

/// Settings for the self-contained initial estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InitConfig {
    /// Tikhonov weight `d` of the stage-1 inverse `(A^T A / s^2 + d I)^-1 A^T z / s^2`.
    pub tikhonov: f64,
    /// Stage-2 hard-threshold level in units of the stage-1 noise deviation.
    pub threshold_factor: f64,
    pub geometry: BlockGeometry,
    pub dst: DstKind,
}

impl Default for InitConfig {
    fn default() -> Self {
        Self {
            tikhonov: 1e-2,
            threshold_factor: 2.7,
            geometry: BlockGeometry::default(),
            dst: DstKind::DstI,
        }
    }
}

#[derive(Clone, Debug)]
pub struct InitialEstimate {
    /// Regularized inverse of the observation.
    pub stage1: Image,
    /// Frame-thresholded stage-1 image; the starting point `y_init`.
    pub image: Image,
    /// Grouping built on `stage1`.
    pub grouping: Arc<Grouping>,
    /// Standard deviation of the noise left in `stage1`.
    pub stage1_noise: f64,
    /// Nonzero spectrum coefficients before and after thresholding.
    pub nonzero_before: usize,
    pub nonzero_after: usize,
}

/// Two-stage initial estimate.
///
/// 1. Regularized inverse `y_1 = (A^T A + s^2 d I)^-1 A^T z`.
/// 2. Block matching on `y_1`, then `y_init = Psi Th_hard(Phi y_1)` with unit
///    weights and the hard level set to `threshold_factor` times the noise
///    deviation that stage 1 passes through.
///
/// Deterministic in its inputs.
pub fn initial_estimate(z: &Image, blur: &BlurOperator, sigma: f64, cfg: &InitConfig) -> Result<InitialEstimate> {
    if !(sigma >= 0.0) {
        return Err(Error::InvalidParameter(format!("sigma must be >= 0, got {sigma}")));
    }
    if !(cfg.tikhonov > 0.0) {
        return Err(Error::InvalidParameter("tikhonov weight must be positive".into()));
    }
    let s2 = sigma * sigma;
    // (A^T A + s^2 d I) y = A^T z; the floor keeps the noiseless case solvable.
    let reg = (s2 * cfg.tikhonov).max(1e-12);
    let stage1 = fft_regularized_solve(blur, &blur.apply_adjoint(z)?, 1.0, reg)?;

    // white noise of variance s^2 passes through conj(H) / (|H|^2 + reg)
    let n = blur.freq_response().len() as f64;
    let gain: f64 = blur
        .freq_response()
        .iter()
        .map(|h| h.norm_sqr() / (h.norm_sqr() + reg).powi(2))
        .sum::<f64>()
        / n;
    let stage1_noise = sigma * gain.sqrt();

    let grouping = Arc::new(block_match(&stage1, &cfg.geometry)?);
    let transform = GroupTransform::dst_haar(cfg.geometry.block_side, cfg.geometry.group_size, cfg.dst)?;
    let frame = FramePair::new(Arc::clone(&grouping), transform)?;
    let level = cfg.threshold_factor * stage1_noise;
    // hard level sqrt(2 tau) = level
    let rule = ThresholdRule::new(ThresholdMode::Hard, level * level / 2.0)?;
    let spectrum = frame.analysis(&stage1)?;
    let nonzero_before = spectrum.iter().filter(|v| **v != 0.0).count();
    let (image, stats) = frame.denoise(&stage1, &rule)?;

    Ok(InitialEstimate {
        stage1,
        image,
        grouping,
        stage1_noise,
        nonzero_before,
        nonzero_after: stats.nonzero,
    })
}
