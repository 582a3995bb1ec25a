//! BM3D analysis and synthesis frames as matrix-free operators.
//!
//! For a grouping `J = {J_r}` and the groupwise transform `G`:
//!
//! * analysis `Phi y` stacks the group spectra `omega_r = Phi_r y`;
//! * `Phi^T omega` inverse-transforms every group and adds the blocks back;
//! * synthesis `Psi omega = W^-1 sum_r g_r Phi_r^T omega_r` is the weighted
//!   mean of the group estimates with `W = sum_r g_r sum_{j in J_r} P_j^T P_j`;
//! * `Psi^T y = [g_r Phi_r W^-1 y]_r`.
//!
//! `Phi` is unweighted, so `Phi^T Phi` is the diagonal coverage map and
//! `Psi Phi = I` for any positive weights. With equal weights
//! `Psi = W^-1 Phi^T`.
//!
//! Groups are processed in parallel. Blocks are scattered back into the image
//! sequentially in group order, so results do not depend on the thread count.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{mismatch, Error, Result};
use crate::grouping::{extract_block_into, place_block_add, Coverage, Grouping};
use crate::image::Image;
use crate::shrinkage::ThresholdRule;
use crate::transform::GroupTransform;

/// How group weights `g_r` are chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightMode {
    /// `g_r = 1`.
    Unit,
    /// `g_r = 1 / ||Th_eps(omega_r)||_0` from the initial spectrum.
    Adaptive,
}

impl std::str::FromStr for WeightMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unit" => Ok(Self::Unit),
            "adaptive" => Ok(Self::Adaptive),
            other => Err(Error::InvalidParameter(format!("unknown weight mode {other:?}"))),
        }
    }
}

impl std::fmt::Display for WeightMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Unit => "unit",
            Self::Adaptive => "adaptive",
        })
    }
}

/// Lower and upper frame bounds: `a ||y||^2 <= ||Phi y||^2 <= b ||y||^2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameBounds {
    pub a: f64,
    pub b: f64,
}

impl FrameBounds {
    pub fn is_tight(&self) -> bool {
        self.a == self.b
    }
}

#[derive(Clone, Debug)]
pub struct FramePair {
    grouping: Arc<Grouping>,
    transform: GroupTransform,
    weights: Vec<f64>,
    coverage: Coverage,
    w_diag: Vec<f64>,
}

impl FramePair {
    /// Frame with unit group weights.
    pub fn new(grouping: Arc<Grouping>, transform: GroupTransform) -> Result<Self> {
        let r = grouping.len();
        Self::with_weights(grouping, transform, vec![1.0; r])
    }

    pub fn with_weights(grouping: Arc<Grouping>, transform: GroupTransform, weights: Vec<f64>) -> Result<Self> {
        if transform.block_side() != grouping.block_side() || transform.group_size() != grouping.group_size() {
            return Err(mismatch(
                format!("{}x{} blocks, K = {}", grouping.block_side(), grouping.block_side(), grouping.group_size()),
                format!("transform for {}x{} blocks, K = {}", transform.block_side(), transform.block_side(), transform.group_size()),
            ));
        }
        if weights.len() != grouping.len() {
            return Err(mismatch(grouping.len(), weights.len()));
        }
        if let Some(r) = weights.iter().position(|g| !(g.is_finite() && *g > 0.0)) {
            return Err(Error::InvalidFrame(format!(
                "weight of group {r} is {}, must be finite and positive",
                weights[r]
            )));
        }
        let coverage = grouping.coverage();
        if !coverage.is_complete() {
            return Err(Error::InvalidFrame(
                "some pixels are not covered by any block; W is singular".into(),
            ));
        }
        let (h, w) = grouping.dims();
        let mut w_img = Image::zeros(h, w);
        let ones = vec![1.0; grouping.block_len()];
        for (group, &g) in grouping.groups().zip(&weights) {
            let scaled: Vec<f64> = ones.iter().map(|v| v * g).collect();
            for pos in group {
                place_block_add(&mut w_img, &scaled, *pos)?;
            }
        }
        Ok(Self {
            grouping,
            transform,
            weights,
            coverage,
            w_diag: w_img.into_vec(),
        })
    }

    /// Same grouping and transform, new weights.
    pub fn reweighted(&self, weights: Vec<f64>) -> Result<Self> {
        Self::with_weights(Arc::clone(&self.grouping), self.transform.clone(), weights)
    }

    pub fn grouping(&self) -> &Arc<Grouping> {
        &self.grouping
    }

    pub fn transform(&self) -> &GroupTransform {
        &self.transform
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn coverage(&self) -> &Coverage {
        &self.coverage
    }

    /// Diagonal of `W`, column-major.
    pub fn w_diag(&self) -> &[f64] {
        &self.w_diag
    }

    pub fn dims(&self) -> (usize, usize) {
        self.grouping.dims()
    }

    pub fn image_len(&self) -> usize {
        let (h, w) = self.dims();
        h * w
    }

    pub fn spectrum_len(&self) -> usize {
        self.grouping.spectrum_len()
    }

    pub fn has_equal_weights(&self) -> bool {
        self.weights.iter().all(|&g| g == self.weights[0])
    }

    /// Hash of the grouping and the exact weight bits.
    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.grouping.hash_blocks(&mut h);
        for g in &self.weights {
            g.to_bits().hash(&mut h);
        }
        h.finish()
    }

    fn check_image(&self, img: &Image) -> Result<()> {
        if img.dims() != self.dims() {
            let (h, w) = self.dims();
            return Err(mismatch(format!("{h}x{w}"), format!("{}x{}", img.height(), img.width())));
        }
        Ok(())
    }

    fn check_spectrum(&self, spectrum: &[f64]) -> Result<()> {
        if spectrum.len() != self.spectrum_len() {
            return Err(mismatch(self.spectrum_len(), spectrum.len()));
        }
        Ok(())
    }

    /// `Phi y`.
    pub fn analysis(&self, img: &Image) -> Result<Vec<f64>> {
        self.check_image(img)?;
        let mut spectrum = vec![0.0; self.spectrum_len()];
        self.analysis_into(img, &mut spectrum);
        Ok(spectrum)
    }

    fn analysis_into(&self, img: &Image, spectrum: &mut [f64]) {
        let nb = self.grouping.block_len();
        let side = self.grouping.block_side();
        spectrum
            .par_chunks_mut(self.grouping.group_coeffs())
            .zip(self.grouping.groups().collect::<Vec<_>>().into_par_iter())
            .for_each_init(
                || vec![0.0; self.grouping.group_coeffs()],
                |blocks, (out, group)| {
                    for (j, pos) in group.iter().enumerate() {
                        extract_block_into(img, *pos, side, &mut blocks[j * nb..(j + 1) * nb])
                            .expect("grouping blocks are in bounds");
                    }
                    self.transform.forward_into(blocks, out).expect("sizes match");
                },
            );
    }

    /// Inverse-transforms every group (scaled by `scale(r)`) and scatters the
    /// blocks into an image.
    fn scatter_groups(&self, spectrum: &[f64], scale: impl Fn(usize) -> f64 + Sync) -> Image {
        let mut blocks = vec![0.0; spectrum.len()];
        blocks
            .par_chunks_mut(self.grouping.group_coeffs())
            .zip(spectrum.par_chunks(self.grouping.group_coeffs()))
            .enumerate()
            .for_each(|(r, (out, spec))| {
                self.transform.inverse_into(spec, out).expect("sizes match");
                let s = scale(r);
                if s != 1.0 {
                    out.iter_mut().for_each(|v| *v *= s);
                }
            });
        self.place_all(&blocks)
    }

    fn place_all(&self, blocks: &[f64]) -> Image {
        let (h, w) = self.dims();
        let nb = self.grouping.block_len();
        let mut acc = Image::zeros(h, w);
        for (group, data) in self.grouping.groups().zip(blocks.chunks_exact(self.grouping.group_coeffs())) {
            for (j, pos) in group.iter().enumerate() {
                place_block_add(&mut acc, &data[j * nb..(j + 1) * nb], *pos).expect("grouping blocks are in bounds");
            }
        }
        acc
    }

    fn divide_by_w(&self, mut img: Image) -> Image {
        for (v, w) in img.as_mut_slice().iter_mut().zip(&self.w_diag) {
            *v /= w;
        }
        img
    }

    /// `Phi^T omega`.
    pub fn analysis_adjoint(&self, spectrum: &[f64]) -> Result<Image> {
        self.check_spectrum(spectrum)?;
        Ok(self.scatter_groups(spectrum, |_| 1.0))
    }

    /// `Psi omega`.
    pub fn synthesis(&self, spectrum: &[f64]) -> Result<Image> {
        self.check_spectrum(spectrum)?;
        let acc = self.scatter_groups(spectrum, |r| self.weights[r]);
        Ok(self.divide_by_w(acc))
    }

    /// `Psi^T y`.
    pub fn synthesis_adjoint(&self, img: &Image) -> Result<Vec<f64>> {
        self.check_image(img)?;
        let scaled = self.divide_by_w(img.clone());
        let mut spectrum = vec![0.0; self.spectrum_len()];
        self.analysis_into(&scaled, &mut spectrum);
        spectrum
            .par_chunks_mut(self.grouping.group_coeffs())
            .zip(self.weights.par_iter())
            .for_each(|(chunk, g)| chunk.iter_mut().for_each(|v| *v *= g));
        Ok(spectrum)
    }

    /// `Phi^T Phi y`, computed as the diagonal coverage map.
    pub fn gram_analysis(&self, img: &Image) -> Result<Image> {
        self.check_image(img)?;
        let mut out = img.clone();
        for (v, c) in out.as_mut_slice().iter_mut().zip(self.coverage.counts().as_slice()) {
            *v *= c;
        }
        Ok(out)
    }

    /// `Psi Th(Phi y)` computed group by group without storing the spectrum.
    ///
    /// Also returns the number of nonzero coefficients kept and the penalty
    /// `tau ||Th(Phi y)||_p` of the thresholded spectrum.
    pub fn denoise(&self, img: &Image, rule: &ThresholdRule) -> Result<(Image, ThresholdStats)> {
        self.check_image(img)?;
        let nb = self.grouping.block_len();
        let side = self.grouping.block_side();
        let gc = self.grouping.group_coeffs();
        let groups: Vec<_> = self.grouping.groups().collect();
        let mut blocks = vec![0.0; self.spectrum_len()];
        let stats = blocks
            .par_chunks_mut(gc)
            .zip(groups.into_par_iter())
            .zip(self.weights.par_iter())
            .map_init(
                || (vec![0.0; gc], vec![0.0; gc]),
                |(raw, spec), ((out, group), g)| {
                    for (j, pos) in group.iter().enumerate() {
                        extract_block_into(img, *pos, side, &mut raw[j * nb..(j + 1) * nb])
                            .expect("grouping blocks are in bounds");
                    }
                    self.transform.forward_into(raw, spec).expect("sizes match");
                    rule.apply_in_place(spec);
                    let nonzero = spec.iter().filter(|v| **v != 0.0).count();
                    let penalty = rule.penalty(spec);
                    self.transform.inverse_into(spec, out).expect("sizes match");
                    out.iter_mut().for_each(|v| *v *= g);
                    ThresholdStats { nonzero, penalty }
                },
            )
            .reduce(ThresholdStats::default, |a, b| ThresholdStats {
                nonzero: a.nonzero + b.nonzero,
                penalty: a.penalty + b.penalty,
            });
        Ok((self.divide_by_w(self.place_all(&blocks)), stats))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ThresholdStats {
    pub nonzero: usize,
    pub penalty: f64,
}

impl Grouping {
    pub(crate) fn hash_blocks<H: Hasher>(&self, state: &mut H) {
        self.dims().hash(state);
        self.block_side().hash(state);
        for group in self.groups() {
            group.hash(state);
        }
    }
}

/// Stacked group spectra `omega = [omega_1; ...; omega_R]`, group-major.
pub type GroupSpectrum = Vec<f64>;

/// Free-function forms of the four frame operators.
pub fn apply_phi(frame: &FramePair, img: &Image) -> Result<GroupSpectrum> {
    frame.analysis(img)
}

pub fn apply_phi_adjoint(frame: &FramePair, spectrum: &[f64]) -> Result<Image> {
    frame.analysis_adjoint(spectrum)
}

pub fn apply_psi(frame: &FramePair, spectrum: &[f64]) -> Result<Image> {
    frame.synthesis(spectrum)
}

pub fn apply_psi_adjoint(frame: &FramePair, img: &Image) -> Result<GroupSpectrum> {
    frame.synthesis_adjoint(img)
}

/// `g_r = 1 / ||Th_eps(omega_r)||_0`, counting coefficients with `|c| >= eps`.
/// Groups without significant coefficients get `g_r = 1`.
pub fn adaptive_weights(spectrum: &[f64], group_coeffs: usize, eps: f64) -> Result<Vec<f64>> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    if group_coeffs == 0 || !spectrum.len().is_multiple_of(group_coeffs) {
        return Err(mismatch(format!("multiple of {group_coeffs}"), spectrum.len()));
    }
    Ok(spectrum
        .chunks_exact(group_coeffs)
        .map(|group| {
            let count = group.iter().filter(|c| c.abs() >= eps).count().max(1);
            1.0 / count as f64
        })
        .collect())
}

/// Frame bounds from the coverage extremes.
pub fn frame_bounds(frame: &FramePair) -> Result<FrameBounds> {
    let cov = frame.coverage();
    if !cov.is_complete() {
        return Err(Error::InvalidFrame("coverage is zero somewhere".into()));
    }
    Ok(FrameBounds {
        a: cov.min(),
        b: cov.max(),
    })
}
