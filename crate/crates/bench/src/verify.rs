//! Randomized checks of the frame identities `Psi Phi = I`,
//! `Phi^T Phi = diag(coverage)` and
//! `Psi Psi^T = W^-2 sum_r g_r^2 sum_{j in J_r} P_j^T P_j`.

use std::sync::Arc;
use std::time::{Duration, Instant};

use bm3d_frames::{BlockPos, DstKind, FramePair, GroupTransform, Grouping, Image};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;

/// Identity residuals must stay below this.
pub const IDENTITY_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct FrameCheck {
    pub height: usize,
    pub width: usize,
    pub block_side: usize,
    pub group_size: usize,
    pub groups: usize,
    /// `max |Psi Phi y - y|` for a random `y`.
    pub reconstruction: f64,
    /// Largest entry of `Phi^T Phi - diag(coverage)`.
    pub gram: f64,
    /// Largest entry of `Psi Psi^T - D`, `D` the predicted diagonal.
    pub synthesis_gram: f64,
}

impl FrameCheck {
    pub fn worst(&self) -> f64 {
        self.reconstruction.max(self.gram).max(self.synthesis_gram)
    }

    pub fn passed(&self) -> bool {
        self.worst() < IDENTITY_TOL
    }
}

#[derive(Clone, Debug)]
pub struct VerifyReport {
    pub checks: Vec<FrameCheck>,
    pub elapsed: Duration,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(FrameCheck::passed)
    }

    pub fn worst(&self) -> f64 {
        self.checks.iter().map(FrameCheck::worst).fold(0.0, f64::max)
    }
}

fn axis_grid(len: usize, side: usize, step: usize) -> Vec<usize> {
    let last = len - side;
    let mut v: Vec<usize> = (0..=last).step_by(step).collect();
    if *v.last().expect("len >= side") != last {
        v.push(last);
    }
    v
}

/// A random grouping that covers every pixel, with random positive weights.
///
/// Every block on a step grid (including the flush last row and column)
/// leads one group; the other members are drawn uniformly without repeats.
pub fn random_frame(rng: &mut impl Rng, height: usize, width: usize) -> Result<FramePair> {
    let max_side = height.min(width).min(4);
    let side = rng.random_range(2..=max_side);
    let step = rng.random_range(1..=side);
    let (nr, nc) = (height - side + 1, width - side + 1);
    let positions = nr * nc;
    let sizes: Vec<usize> = [1, 2, 4, 8].into_iter().filter(|&k| k <= positions).collect();
    let k = sizes[rng.random_range(0..sizes.len())];

    let mut groups = Vec::new();
    for &c in &axis_grid(width, side, step) {
        for &r in &axis_grid(height, side, step) {
            let lead = BlockPos::new(r, c);
            let mut group = vec![lead];
            let lead_idx = c * nr + r;
            for idx in sample(rng, positions - 1, k - 1) {
                let idx = if idx >= lead_idx { idx + 1 } else { idx };
                group.push(BlockPos::new(idx % nr, idx / nr));
            }
            groups.push(group);
        }
    }
    let grouping = Arc::new(Grouping::from_groups(height, width, side, groups)?);
    let weights: Vec<f64> = (0..grouping.len()).map(|_| rng.random_range(0.1..3.0)).collect();
    let transform = GroupTransform::dst_haar(side, k, DstKind::DstI)?;
    Ok(FramePair::with_weights(grouping, transform, weights)?)
}

fn unit(h: usize, w: usize, i: usize) -> Image {
    let mut img = Image::zeros(h, w);
    img.as_mut_slice()[i] = 1.0;
    img
}

/// Coverage and `sum_r g_r^2 P^T P` diagonals straight from the group table.
fn predicted_diagonals(frame: &FramePair) -> (Vec<f64>, Vec<f64>) {
    let (h, w) = frame.dims();
    let g = frame.grouping();
    let side = g.block_side();
    let mut w_diag = vec![0.0; h * w];
    let mut cov = vec![0.0; h * w];
    let mut sq = vec![0.0; h * w];
    for (r, group) in g.groups().enumerate() {
        let gr = frame.weights()[r];
        for pos in group {
            for c in 0..side {
                for rr in 0..side {
                    let i = (pos.col + c) * h + pos.row + rr;
                    cov[i] += 1.0;
                    w_diag[i] += gr;
                    sq[i] += gr * gr;
                }
            }
        }
    }
    let psi_diag = sq.iter().zip(&w_diag).map(|(s, wd)| s / (wd * wd)).collect();
    (cov, psi_diag)
}

pub fn check_frame(frame: &FramePair, rng: &mut impl Rng) -> Result<FrameCheck> {
    let (h, w) = frame.dims();
    let n = h * w;
    let y = Image::from_fn(h, w, |_, _| rng.random_range(-100.0..100.0));
    let back = frame.synthesis(&frame.analysis(&y)?)?;
    let reconstruction = back
        .as_slice()
        .iter()
        .zip(y.as_slice())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);

    let (cov, psi_diag) = predicted_diagonals(frame);
    let mut gram = 0.0f64;
    let mut synthesis_gram = 0.0f64;
    for i in 0..n {
        let e = unit(h, w, i);
        let col = frame.analysis_adjoint(&frame.analysis(&e)?)?;
        let col2 = frame.synthesis(&frame.synthesis_adjoint(&e)?)?;
        for j in 0..n {
            let (want1, want2) = if i == j { (cov[i], psi_diag[i]) } else { (0.0, 0.0) };
            gram = gram.max((col.as_slice()[j] - want1).abs());
            synthesis_gram = synthesis_gram.max((col2.as_slice()[j] - want2).abs());
        }
    }
    let g = frame.grouping();
    Ok(FrameCheck {
        height: h,
        width: w,
        block_side: g.block_side(),
        group_size: g.group_size(),
        groups: g.len(),
        reconstruction,
        gram,
        synthesis_gram,
    })
}

/// Checks `count` random frames on images whose sides are drawn from
/// `sizes` (inclusive).
pub fn verify_frames(sizes: std::ops::RangeInclusive<usize>, count: usize, seed: u64) -> Result<VerifyReport> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::with_capacity(count);
    for _ in 0..count {
        let h = rng.random_range(sizes.clone());
        let w = rng.random_range(sizes.clone());
        let frame = random_frame(&mut rng, h, w)?;
        checks.push(check_frame(&frame, &mut rng)?);
    }
    Ok(VerifyReport {
        checks,
        elapsed: start.elapsed(),
    })
}
