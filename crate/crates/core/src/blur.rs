//! Circular convolution blur and the observation model `z = A y + sigma * eps`.

use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::{Fft, FftPlanner};

use crate::error::{mismatch, Error, Result};
use crate::image::Image;

/// Name of the generator used for observation noise; stored with results.
pub const NOISE_RNG: &str = "ChaCha8Rng+StandardNormal";

/// 2-D FFT over a column-major `height x width` grid.
#[derive(Clone)]
pub struct Fft2d {
    height: usize,
    width: usize,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2d {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Fft2d({}x{})", self.height, self.width)
    }
}

impl Fft2d {
    pub fn new(height: usize, width: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            height,
            width,
            col_fwd: planner.plan_fft_forward(height),
            col_inv: planner.plan_fft_inverse(height),
            row_fwd: planner.plan_fft_forward(width),
            row_inv: planner.plan_fft_inverse(width),
        }
    }

    pub fn forward_real(&self, data: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut buf);
        buf
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        self.transform(buf, &self.col_fwd, &self.row_fwd);
    }

    /// Unnormalized inverse; callers divide by `N`.
    fn inverse_raw(&self, buf: &mut [Complex64]) {
        self.transform(buf, &self.col_inv, &self.row_inv);
    }

    /// Inverse transform returning the real part, scaled by `1/N`.
    pub fn inverse_real(&self, mut buf: Vec<Complex64>) -> Vec<f64> {
        self.inverse_raw(&mut buf);
        let scale = 1.0 / buf.len() as f64;
        buf.iter().map(|c| c.re * scale).collect()
    }

    fn transform(&self, buf: &mut [Complex64], col: &Arc<dyn Fft<f64>>, row: &Arc<dyn Fft<f64>>) {
        let (h, w) = (self.height, self.width);
        assert_eq!(buf.len(), h * w);
        // columns are contiguous
        col.process(buf);
        let mut line = vec![Complex64::new(0.0, 0.0); w];
        for r in 0..h {
            for c in 0..w {
                line[c] = buf[c * h + r];
            }
            row.process(&mut line);
            for c in 0..w {
                buf[c * h + r] = line[c];
            }
        }
    }
}

/// Square-summable convolution kernel `h` with its cached transfer function.
#[derive(Clone, Debug)]
pub struct BlurOperator {
    kernel: Image,
    height: usize,
    width: usize,
    freq_response: Vec<Complex64>,
    fft: Fft2d,
}

impl BlurOperator {
    /// Builds the operator for images of size `height x width`.
    ///
    /// The kernel must sum to one. Its center tap `(kh/2, kw/2)` is shifted to
    /// frequency index `(0, 0)` so blurring does not translate the image.
    pub fn new(kernel: Image, height: usize, width: usize) -> Result<Self> {
        let sum: f64 = kernel.as_slice().iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "kernel must sum to 1, sums to {sum}"
            )));
        }
        if kernel.height() > height || kernel.width() > width {
            return Err(Error::InvalidParameter(format!(
                "{}x{} kernel does not fit a {height}x{width} image",
                kernel.height(),
                kernel.width()
            )));
        }
        let fft = Fft2d::new(height, width);
        let (kh, kw) = kernel.dims();
        let (ch, cw) = (kh / 2, kw / 2);
        let mut padded = vec![0.0; height * width];
        for c in 0..kw {
            for r in 0..kh {
                let pr = (r + height - ch) % height;
                let pc = (c + width - cw) % width;
                padded[pc * height + pr] += kernel.get(r, c);
            }
        }
        let freq_response = fft.forward_real(&padded);
        Ok(Self {
            kernel,
            height,
            width,
            freq_response,
            fft,
        })
    }

    /// Normalizes arbitrary nonnegative taps to unit sum before building.
    pub fn normalized(kernel: Image, height: usize, width: usize) -> Result<Self> {
        let sum: f64 = kernel.as_slice().iter().sum();
        if sum.abs() < f64::EPSILON {
            return Err(Error::InvalidParameter("kernel sums to zero".into()));
        }
        Self::new(kernel.map(|v| v / sum), height, width)
    }

    pub fn identity(height: usize, width: usize) -> Self {
        Self::new(Image::filled(1, 1, 1.0), height, width).expect("unit tap is valid")
    }

    pub fn kernel(&self) -> &Image {
        &self.kernel
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn freq_response(&self) -> &[Complex64] {
        &self.freq_response
    }

    pub fn fft(&self) -> &Fft2d {
        &self.fft
    }

    fn check(&self, img: &Image) -> Result<()> {
        if img.dims() != (self.height, self.width) {
            return Err(mismatch(
                format!("{}x{}", self.height, self.width),
                format!("{}x{}", img.height(), img.width()),
            ));
        }
        Ok(())
    }

    fn filter(&self, img: &Image, conjugate: bool) -> Result<Image> {
        self.check(img)?;
        let mut spec = self.fft.forward_real(img.as_slice());
        for (s, h) in spec.iter_mut().zip(&self.freq_response) {
            *s *= if conjugate { h.conj() } else { *h };
        }
        Image::from_vec(self.height, self.width, self.fft.inverse_real(spec))
    }

    /// `A y`: circular convolution with the kernel.
    pub fn apply(&self, img: &Image) -> Result<Image> {
        self.filter(img, false)
    }

    /// `A^T y`: circular correlation with the kernel.
    pub fn apply_adjoint(&self, img: &Image) -> Result<Image> {
        self.filter(img, true)
    }
}

/// Gaussian observation noise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSpec {
    pub sigma: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(sigma: f64, seed: u64) -> Result<Self> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "noise sigma must be finite and >= 0, got {sigma}"
            )));
        }
        Ok(Self { sigma, seed })
    }
}

pub fn apply_blur(img: &Image, blur: &BlurOperator) -> Result<Image> {
    blur.apply(img)
}

/// `z = A y + sigma * eps` with `eps` i.i.d. standard normal drawn from `noise.seed`.
pub fn simulate_observation(img: &Image, blur: &BlurOperator, noise: NoiseSpec) -> Result<Image> {
    let mut z = blur.apply(img)?;
    if noise.sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
        for v in z.as_mut_slice() {
            let e: f64 = StandardNormal.sample(&mut rng);
            *v += noise.sigma * e;
        }
    }
    Ok(z)
}
