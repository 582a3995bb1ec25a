//! Thresholding: the proximal maps of the `l1` and `l0` penalties.
//!
//! For `min_w tau * ||w||_p + 0.5 * ||w - b||^2` the minimizer is soft
//! thresholding at `tau` for `p = 1` and hard thresholding at `sqrt(2 tau)` for
//! `p = 0`. The two levels differ for the same `tau`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdMode {
    Soft,
    Hard,
}

impl std::str::FromStr for ThresholdMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "soft" => Ok(Self::Soft),
            "hard" => Ok(Self::Hard),
            other => Err(Error::InvalidParameter(format!("unknown threshold mode {other:?}"))),
        }
    }
}

impl std::fmt::Display for ThresholdMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Soft => "soft",
            Self::Hard => "hard",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThresholdRule {
    mode: ThresholdMode,
    tau: f64,
}

impl ThresholdRule {
    pub fn new(mode: ThresholdMode, tau: f64) -> Result<Self> {
        if !(tau >= 0.0) || !tau.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "threshold parameter must be finite and >= 0, got {tau}"
            )));
        }
        Ok(Self { mode, tau })
    }

    pub fn mode(&self) -> ThresholdMode {
        self.mode
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// The magnitude at which coefficients start to survive.
    pub fn level(&self) -> f64 {
        match self.mode {
            ThresholdMode::Soft => self.tau,
            ThresholdMode::Hard => (2.0 * self.tau).sqrt(),
        }
    }

    #[inline]
    pub fn apply_scalar(&self, b: f64) -> f64 {
        match self.mode {
            ThresholdMode::Soft => b.signum() * (b.abs() - self.tau).max(0.0),
            ThresholdMode::Hard => {
                if b.abs() >= self.level() {
                    b
                } else {
                    0.0
                }
            }
        }
    }

    pub fn apply_in_place(&self, coeffs: &mut [f64]) {
        match self.mode {
            ThresholdMode::Soft => {
                let tau = self.tau;
                for v in coeffs {
                    *v = v.signum() * (v.abs() - tau).max(0.0);
                }
            }
            ThresholdMode::Hard => {
                let level = self.level();
                for v in coeffs {
                    if v.abs() < level {
                        *v = 0.0;
                    }
                }
            }
        }
    }

    /// The penalty `tau * ||w||_p` that this rule is the proximal map of.
    pub fn penalty(&self, coeffs: &[f64]) -> f64 {
        match self.mode {
            ThresholdMode::Soft => self.tau * coeffs.iter().map(|v| v.abs()).sum::<f64>(),
            ThresholdMode::Hard => self.tau * coeffs.iter().filter(|v| **v != 0.0).count() as f64,
        }
    }
}

pub fn threshold(rule: &ThresholdRule, b: &[f64]) -> Vec<f64> {
    let mut out = b.to_vec();
    rule.apply_in_place(&mut out);
    out
}
