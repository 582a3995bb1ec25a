//! Dense reference implementations shared by the integration tests.
//!
//! Nothing here calls the operators under test: transforms, block
//! selections and blur matrices are rebuilt from their definitions.

#![allow(dead_code)]

use std::sync::Arc;

use bm3d_frames::{BlockPos, BlurOperator, DstKind, FramePair, GroupTransform, Grouping, Image};
use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_image(rng: &mut impl Rng, h: usize, w: usize) -> Image {
    Image::from_fn(h, w, |_, _| rng.random_range(-50.0..200.0))
}

pub fn to_dvec(img: &Image) -> DVector<f64> {
    DVector::from_column_slice(img.as_slice())
}

pub fn from_dvec(h: usize, w: usize, v: &DVector<f64>) -> Image {
    Image::from_vec(h, w, v.as_slice().to_vec()).unwrap()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Orthonormal DST-I: `sqrt(2/(n+1)) sin(pi (i+1)(j+1)/(n+1))`.
pub fn dst1(n: usize) -> DMatrix<f64> {
    let s = (2.0 / (n as f64 + 1.0)).sqrt();
    DMatrix::from_fn(n, n, |i, j| {
        s * (std::f64::consts::PI * ((i + 1) * (j + 1)) as f64 / (n as f64 + 1.0)).sin()
    })
}

/// Orthonormal Haar matrix by the scaling/wavelet recursion
/// `H_2n = [H_n (x) [1 1]; I_n (x) [1 -1]] / sqrt(2)`.
pub fn haar(k: usize) -> DMatrix<f64> {
    assert!(k.is_power_of_two());
    let mut h = DMatrix::from_element(1, 1, 1.0);
    while h.nrows() < k {
        let n = h.nrows();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let top = h.kronecker(&DMatrix::from_row_slice(1, 2, &[s, s]));
        let bottom = DMatrix::<f64>::identity(n, n).kronecker(&DMatrix::from_row_slice(1, 2, &[s, -s]));
        let mut next = DMatrix::zeros(2 * n, 2 * n);
        next.view_mut((0, 0), (n, 2 * n)).copy_from(&top);
        next.view_mut((n, 0), (n, 2 * n)).copy_from(&bottom);
        h = next;
    }
    h
}

/// `P_j`: selects the column-major `side x side` block at `pos`.
pub fn selection(h: usize, w: usize, pos: BlockPos, side: usize) -> DMatrix<f64> {
    let mut p = DMatrix::zeros(side * side, h * w);
    for c in 0..side {
        for r in 0..side {
            p[(c * side + r, (pos.col + c) * h + pos.row + r)] = 1.0;
        }
    }
    p
}

/// Dense `Phi` with rows ordered group by group; inside a group coefficient
/// `(i, k)` of the `k`-th 1-D transform output sits at `k * side^2 + i`.
pub fn dense_phi(grouping: &Grouping) -> DMatrix<f64> {
    let (h, w) = grouping.dims();
    let side = grouping.block_side();
    let k = grouping.group_size();
    let nb = side * side;
    let d = dst1(side);
    // vec(D Y D^T) = (D (x) D) vec(Y) for column-major vec
    let d2 = d.kronecker(&d);
    let d1 = haar(k);
    let mut phi = DMatrix::zeros(grouping.len() * nb * k, h * w);
    for (r, group) in grouping.groups().enumerate() {
        let mut phi_r = DMatrix::zeros(nb * k, h * w);
        for (j, pos) in group.iter().enumerate() {
            let block = &d2 * selection(h, w, *pos, side);
            for kk in 0..k {
                let coeff = d1[(kk, j)];
                if coeff != 0.0 {
                    let mut rows = phi_r.rows_mut(kk * nb, nb);
                    rows += &block * coeff;
                }
            }
        }
        phi.rows_mut(r * nb * k, nb * k).copy_from(&phi_r);
    }
    phi
}

/// Dense `Psi = W^-1 [g_1 Phi_1^T ... g_R Phi_R^T]`.
pub fn dense_psi(grouping: &Grouping, phi: &DMatrix<f64>, weights: &[f64]) -> DMatrix<f64> {
    let (h, w) = grouping.dims();
    let n = h * w;
    let gc = grouping.block_len() * grouping.group_size();
    let mut w_diag = DVector::zeros(n);
    for (r, group) in grouping.groups().enumerate() {
        for pos in group {
            let p = selection(h, w, *pos, grouping.block_side());
            w_diag += p.transpose() * DVector::from_element(p.nrows(), weights[r]);
        }
    }
    let mut psi = phi.transpose();
    for (r, g) in weights.iter().enumerate() {
        let mut cols = psi.columns_mut(r * gc, gc);
        cols *= *g;
    }
    for i in 0..n {
        let mut row = psi.row_mut(i);
        row /= w_diag[i];
    }
    psi
}

/// Dense circular convolution with the kernel's center tap at the origin.
pub fn dense_blur(kernel: &Image, h: usize, w: usize) -> DMatrix<f64> {
    let (kh, kw) = kernel.dims();
    let (ch, cw) = (kh / 2, kw / 2);
    let n = h * w;
    let mut a = DMatrix::zeros(n, n);
    for c in 0..w {
        for r in 0..h {
            for b in 0..kw {
                for t in 0..kh {
                    // output (r, c) reads input (r - (t - ch), c - (b - cw))
                    let ir = (r + h * kh + ch - t) % h;
                    let ic = (c + w * kw + cw - b) % w;
                    a[(c * h + r, ic * h + ir)] += kernel.get(t, b);
                }
            }
        }
    }
    a
}

/// Positive kernel with unit sum.
pub fn random_kernel(rng: &mut impl Rng, kh: usize, kw: usize) -> Image {
    let k = Image::from_fn(kh, kw, |_, _| rng.random_range(0.05..1.0));
    let s: f64 = k.as_slice().iter().sum();
    k.map(|v| v / s)
}

pub fn random_blur(rng: &mut impl Rng, h: usize, w: usize) -> (BlurOperator, DMatrix<f64>) {
    let kh = rng.random_range(1..=h.min(5));
    let kw = rng.random_range(1..=w.min(5));
    let k = random_kernel(rng, kh, kw);
    let dense = dense_blur(&k, h, w);
    (BlurOperator::new(k, h, w).unwrap(), dense)
}

fn axis_grid(len: usize, side: usize, step: usize) -> Vec<usize> {
    let last = len - side;
    let mut v: Vec<usize> = (0..=last).step_by(step).collect();
    if *v.last().unwrap() != last {
        v.push(last);
    }
    v
}

/// Covering grouping: every block of a step grid leads a group, the other
/// `k - 1` members are random distinct blocks.
pub fn random_grouping(rng: &mut impl Rng, h: usize, w: usize, side: usize, k: usize, step: usize) -> Grouping {
    let (nr, nc) = (h - side + 1, w - side + 1);
    let positions = nr * nc;
    assert!(k <= positions);
    let mut groups = Vec::new();
    for &c in &axis_grid(w, side, step) {
        for &r in &axis_grid(h, side, step) {
            let lead = c * nr + r;
            let mut group = vec![BlockPos::new(r, c)];
            for idx in sample(rng, positions - 1, k - 1) {
                let idx = if idx >= lead { idx + 1 } else { idx };
                group.push(BlockPos::new(idx % nr, idx / nr));
            }
            groups.push(group);
        }
    }
    Grouping::from_groups(h, w, side, groups).unwrap()
}

pub fn random_weights(rng: &mut impl Rng, r: usize) -> Vec<f64> {
    (0..r).map(|_| rng.random_range(0.1..3.0)).collect()
}

pub fn frame_for(grouping: Grouping, weights: Option<Vec<f64>>) -> FramePair {
    let t = GroupTransform::dst_haar(grouping.block_side(), grouping.group_size(), DstKind::DstI).unwrap();
    let g = Arc::new(grouping);
    match weights {
        Some(w) => FramePair::with_weights(g, t, w).unwrap(),
        None => FramePair::new(g, t).unwrap(),
    }
}

/// Random covering frame on an `h x w` image: side 2..=4, K in {1, 2, 4, 8}.
pub fn random_frame(rng: &mut impl Rng, h: usize, w: usize, weighted: bool) -> FramePair {
    let side = rng.random_range(2..=h.min(w).min(4));
    let step = rng.random_range(1..=side);
    let positions = (h - side + 1) * (w - side + 1);
    let ks: Vec<usize> = [1, 2, 4, 8].into_iter().filter(|&k| k <= positions).collect();
    let k = ks[rng.random_range(0..ks.len())];
    let grouping = random_grouping(rng, h, w, side, k, step);
    let weights = weighted.then(|| random_weights(rng, grouping.len()));
    frame_for(grouping, weights)
}

/// Dense matrix of a linear image-to-vector map, column by column.
pub fn columns_of(n_in: usize, n_out: usize, f: impl Fn(usize) -> Vec<f64>) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n_out, n_in);
    for j in 0..n_in {
        m.column_mut(j).copy_from_slice(&f(j));
    }
    m
}

pub fn unit_image(h: usize, w: usize, i: usize) -> Image {
    let mut img = Image::zeros(h, w);
    img.as_mut_slice()[i] = 1.0;
    img
}

pub fn unit_vec(n: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}
