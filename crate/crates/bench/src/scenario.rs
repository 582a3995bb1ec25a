//! The six standard blur/noise scenarios.

use bm3d_frames::{BlurOperator, Image};

use crate::error::{BenchError, Result};

/// Noise variance used for scenario 3 (nominally "about 0.3").
pub const SCENARIO3_SIGMA2: f64 = 0.308;

/// Support of the truncated Gaussian PSFs (scenarios 5 and 6).
pub const GAUSSIAN_SUPPORT: usize = 25;

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub id: u8,
    /// Unit-sum PSF taps; the center tap is `(rows/2, cols/2)`.
    pub psf: Image,
    pub sigma2: f64,
    pub description: &'static str,
}

impl Scenario {
    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }

    pub fn blur_for(&self, height: usize, width: usize) -> Result<BlurOperator> {
        Ok(BlurOperator::new(self.psf.clone(), height, width)?)
    }
}

fn normalize(taps: Image) -> Image {
    let sum: f64 = taps.as_slice().iter().sum();
    taps.map(|v| v / sum)
}

fn gaussian(std: f64, support: usize) -> Image {
    let c = (support / 2) as f64;
    normalize(Image::from_fn(support, support, |r, col| {
        let (dx, dy) = (r as f64 - c, col as f64 - c);
        (-(dx * dx + dy * dy) / (2.0 * std * std)).exp()
    }))
}

/// Unnormalized `[1 4 6 4 1]^T [1 4 6 4 1] / 256`.
pub fn binomial_taps() -> Image {
    let b = [1.0, 4.0, 6.0, 4.0, 1.0];
    Image::from_fn(5, 5, |r, c| b[r] * b[c] / 256.0)
}

fn rational() -> Image {
    normalize(Image::from_fn(15, 15, |r, c| {
        let (x1, x2) = (r as f64 - 7.0, c as f64 - 7.0);
        1.0 / (1.0 + x1 * x1 + x2 * x2)
    }))
}

pub fn build_scenario(id: u8) -> Result<Scenario> {
    let (psf, sigma2, description) = match id {
        1 => (rational(), 2.0, "1/(1+x1^2+x2^2), x1,x2 = -7..7"),
        2 => (rational(), 8.0, "1/(1+x1^2+x2^2), x1,x2 = -7..7"),
        3 => (normalize(Image::filled(9, 9, 1.0)), SCENARIO3_SIGMA2, "9x9 uniform"),
        4 => (normalize(binomial_taps()), 49.0, "[1 4 6 4 1]^T [1 4 6 4 1] / 256"),
        5 => (gaussian(1.6, GAUSSIAN_SUPPORT), 4.0, "Gaussian, std 1.6"),
        6 => (gaussian(0.4, GAUSSIAN_SUPPORT), 64.0, "Gaussian, std 0.4"),
        other => return Err(BenchError::UnknownScenario(other)),
    };
    Ok(Scenario {
        id,
        psf,
        sigma2,
        description,
    })
}

pub fn all_scenarios() -> Vec<Scenario> {
    (1..=6).map(|id| build_scenario(id).expect("ids 1..=6 exist")).collect()
}
