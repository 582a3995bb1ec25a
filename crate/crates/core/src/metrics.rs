//! Quality metrics in decibels.
//!
//! Degenerate ratios map to IEEE infinities: a perfect reconstruction gives
//! `f64::INFINITY`, a zero-variance blurred signal gives `f64::NEG_INFINITY`.
//! Callers can test for them with [`f64::is_infinite`].

use crate::error::Result;
use crate::image::Image;

pub const DEFAULT_PEAK: f64 = 255.0;

/// `10 log10(peak^2 N / ||ref - est||^2)`.
pub fn psnr(reference: &Image, estimate: &Image, peak: f64) -> Result<f64> {
    reference.check_same_dims(estimate)?;
    if !(peak > 0.0) {
        return Err(crate::Error::InvalidParameter(format!(
            "peak must be positive, got {peak}"
        )));
    }
    let err = reference.dist_sq(estimate);
    if err == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak * reference.len() as f64 / err).log10())
}

/// Improvement in SNR: `10 log10(||y - z||^2 / ||y - y_hat||^2)`.
pub fn isnr(truth: &Image, observed: &Image, restored: &Image) -> Result<f64> {
    truth.check_same_dims(observed)?;
    truth.check_same_dims(restored)?;
    let restored_err = truth.dist_sq(restored);
    if restored_err == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (truth.dist_sq(observed) / restored_err).log10())
}

/// Blurred SNR with the per-pixel variance convention:
/// `10 log10(var(A y) / sigma^2)`, `var` being the population variance of the
/// blurred clean image.
pub fn bsnr(blurred_clean: &Image, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return f64::INFINITY;
    }
    let var = blurred_clean.variance();
    if var == 0.0 {
        return f64::NEG_INFINITY;
    }
    10.0 * (var / (sigma * sigma)).log10()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(offset: f64) -> Image {
        Image::from_fn(4, 5, |r, c| (r * 5 + c) as f64 + offset)
    }

    #[test]
    fn psnr_cases() {
        let a = ramp(0.0);
        assert_eq!(psnr(&a, &a, 255.0).unwrap(), f64::INFINITY);
        let zeros = Image::zeros(4, 4);
        let full = Image::filled(4, 4, 255.0);
        assert!(psnr(&zeros, &full, 255.0).unwrap().abs() < 1e-12);
        assert!(psnr(&zeros, &full, 0.0).is_err());
        assert!(psnr(&zeros, &Image::zeros(4, 5), 255.0).is_err());
    }

    #[test]
    fn isnr_cases() {
        let truth = ramp(0.0);
        let observed = truth.map(|v| v + 3.0);
        assert_eq!(isnr(&truth, &observed, &observed).unwrap(), 0.0);
        let closer = truth.map(|v| v + 1.0);
        assert!(isnr(&truth, &observed, &closer).unwrap() > 0.0);
        assert_eq!(isnr(&truth, &observed, &truth).unwrap(), f64::INFINITY);
    }

    #[test]
    fn offset_invariance() {
        let t = ramp(0.0);
        let o = Image::from_fn(4, 5, |r, c| ((r * 7 + c * 3) % 11) as f64);
        let e = Image::from_fn(4, 5, |r, c| (r * 5 + c) as f64 + ((r + c) % 3) as f64 * 0.5);
        let shift = |img: &Image| img.map(|v| v + 17.25);
        let p0 = psnr(&t, &e, 255.0).unwrap();
        let p1 = psnr(&shift(&t), &shift(&e), 255.0).unwrap();
        assert!((p0 - p1).abs() < 1e-9);
        let i0 = isnr(&t, &o, &e).unwrap();
        let i1 = isnr(&shift(&t), &shift(&o), &shift(&e)).unwrap();
        assert!((i0 - i1).abs() < 1e-9);
    }

    #[test]
    fn bsnr_sentinels() {
        assert_eq!(bsnr(&Image::filled(3, 3, 5.0), 1.0), f64::NEG_INFINITY);
        assert_eq!(bsnr(&ramp(0.0), 0.0), f64::INFINITY);
        // variance of 0..20 is (20^2 - 1) / 12 = 33.25
        assert!((bsnr(&ramp(0.0), 1.0) - 10.0 * 33.25f64.log10()).abs() < 1e-12);
    }
}
