//! Outer iterations for frame-based deblurring.
//!
//! * [`analysis_deblur`]: augmented Lagrangian on `omega = Phi y`;
//! * [`synthesis_deblur`]: augmented Lagrangian on `y = Psi u` with a split
//!   spectrum variable;
//! * [`idd_bm3d_deblur`]: decoupled deblurring that alternates an FFT
//!   regularized inverse with frame-domain thresholding.
//!
//! All three take a prebuilt [`FramePair`]; its grouping and weights stay
//! fixed for the whole run.

mod analysis;
mod idd;
mod init;
mod spectral;
mod synthesis;

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use analysis::analysis_deblur;
pub use idd::{idd_bm3d_deblur, IddStep};
pub use init::{initial_estimate, InitConfig, InitialEstimate};
pub use spectral::{check_nonexpansive_map, EigenMethod, SpectralReport, DENSE_LIMIT};
pub use synthesis::synthesis_deblur;

use crate::blur::BlurOperator;
use crate::error::{Error, Result};
use crate::frames::WeightMode;
use crate::image::Image;
use crate::metrics;
use crate::shrinkage::ThresholdMode;
use crate::solvers::CgConfig;

/// Regularization and loop settings shared by the three algorithms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlgoParams {
    /// Penalty weight `tau`.
    pub tau: f64,
    /// Penalty parameter `gamma` of the image-side quadratic term.
    pub gamma: f64,
    /// Penalty parameter `xi` of the spectrum-side quadratic term.
    pub xi: f64,
    /// Multiplier step `beta`.
    pub beta: f64,
    pub mode: ThresholdMode,
    pub weights: WeightMode,
    pub max_iters: usize,
    /// Stop once `||y_{t+1} - y_t|| / ||y_t||` drops below this.
    pub stop_tol: f64,
    pub cg: CgConfig,
}

impl Default for AlgoParams {
    fn default() -> Self {
        Self {
            tau: 1.0,
            gamma: 1.0,
            xi: 1.0,
            beta: 1.0,
            mode: ThresholdMode::Soft,
            weights: WeightMode::Unit,
            max_iters: 200,
            stop_tol: 1e-4,
            cg: CgConfig::default(),
        }
    }
}

impl AlgoParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("tau", self.tau), ("gamma", self.gamma), ("xi", self.xi), ("beta", self.beta)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be >= 1".into()));
        }
        self.cg.validate()
    }
}

/// Inputs shared by every algorithm.
#[derive(Clone, Copy, Debug)]
pub struct Problem<'a> {
    pub observed: &'a Image,
    pub blur: &'a BlurOperator,
    pub sigma: f64,
    /// Starting image `y_0`.
    pub init: &'a Image,
    /// Ground truth for ISNR tracking, if known.
    pub truth: Option<&'a Image>,
}

impl Problem<'_> {
    pub(crate) fn validate(&self) -> Result<()> {
        self.observed.check_same_dims(self.init)?;
        if self.blur.dims() != self.observed.dims() {
            let (h, w) = self.blur.dims();
            return Err(crate::error::mismatch(
                format!("{h}x{w}"),
                format!("{}x{}", self.observed.height(), self.observed.width()),
            ));
        }
        if let Some(t) = self.truth {
            t.check_same_dims(self.observed)?;
        }
        if !(self.sigma > 0.0) {
            return Err(Error::InvalidParameter(format!("sigma must be positive, got {}", self.sigma)));
        }
        Ok(())
    }

    pub(crate) fn isnr(&self, estimate: &Image) -> Option<f64> {
        self.truth
            .map(|t| metrics::isnr(t, self.observed, estimate).expect("dims validated"))
    }

    /// `||z - A y||^2 / (2 sigma^2)`.
    pub(crate) fn fidelity(&self, y: &Image) -> f64 {
        let ay = self.blur.apply(y).expect("dims validated");
        self.observed.dist_sq(&ay) / (2.0 * self.sigma * self.sigma)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub isnr: Option<f64>,
    pub rel_change: f64,
    /// `||z - A y||^2 / (2 sigma^2)`.
    pub fidelity: f64,
    /// `tau ||omega||_p`.
    pub penalty: f64,
    /// Algorithm-specific coupling residual, e.g. `||omega - Phi y|| / ||omega||`.
    pub coupling: f64,
    pub inner_iterations: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub records: Vec<IterationRecord>,
}

impl IterationTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    /// ISNR after `iteration` outer iterations (1-based).
    pub fn isnr_at(&self, iteration: usize) -> Option<f64> {
        self.records.iter().find(|r| r.iteration == iteration).and_then(|r| r.isnr)
    }

    pub fn converged(&self, stop_tol: f64) -> bool {
        self.last().is_some_and(|r| r.rel_change < stop_tol)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,isnr,rel_change,fidelity,penalty,coupling,inner_iterations\n");
        for r in &self.records {
            let isnr = r.isnr.map(|v| format!("{v:.6}")).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{:.6e},{:.6e},{:.6e},{:.6e},{}",
                r.iteration, isnr, r.rel_change, r.fidelity, r.penalty, r.coupling, r.inner_iterations
            );
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

pub(crate) fn rel_change(next: &Image, prev: &Image) -> f64 {
    let denom = prev.norm_sq().sqrt();
    let diff = next.dist_sq(prev).sqrt();
    if denom == 0.0 {
        if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        diff / denom
    }
}

pub(crate) fn check_finite(algorithm: &'static str, iteration: usize, values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFiniteIterate { algorithm, iteration })
    }
}
