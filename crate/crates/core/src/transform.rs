//! Separable orthonormal transforms for groups of blocks.
//!
//! A group of `K` blocks of `n x n` pixels is transformed by applying the 2-D
//! transform `D2 Y D2^T` to every block and then the 1-D transform `D1` across
//! the blocks. With `theta_j` the vectorized block spectra, the group
//! spectrum is the `N_bl x K` matrix `[theta_1 .. theta_K] D1^T`, stored
//! column-major.

use serde::{Deserialize, Serialize};

use crate::error::{mismatch, Error, Result};

/// Dense square matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Largest entry of `|M^T M - I|`.
    pub fn orthonormality_error(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let dot: f64 = (0..n).map(|k| self.get(k, i) * self.get(k, j)).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }

    pub fn apply_transpose(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self.get(i, j) * x[i]).sum())
            .collect()
    }
}

/// Sine transform variants for the intrablock transform.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DstKind {
    /// `sqrt(2/(n+1)) sin(pi i j / (n+1))`, `i, j = 1..n`.
    #[default]
    DstI,
    /// `sqrt(2/n) c_i sin(pi i (2j - 1) / (2n))` with `c_n = 1/sqrt(2)`.
    DstII,
}

/// The 1-D intrablock transform `D2`, applied separably to each block.
#[derive(Clone, Debug, PartialEq)]
pub struct Transform2D {
    matrix: SquareMatrix,
}

impl Transform2D {
    pub fn matrix(&self) -> &SquareMatrix {
        &self.matrix
    }

    pub fn side(&self) -> usize {
        self.matrix.size()
    }
}

/// The interblock transform `D1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Transform1D {
    matrix: SquareMatrix,
}

impl Transform1D {
    pub fn matrix(&self) -> &SquareMatrix {
        &self.matrix
    }

    pub fn len(&self) -> usize {
        self.matrix.size()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.size() == 0
    }
}

pub fn dst_matrix(side: usize, kind: DstKind) -> Result<Transform2D> {
    if side < 2 {
        return Err(Error::InvalidParameter(format!("DST size must be >= 2, got {side}")));
    }
    let n = side as f64;
    let pi = std::f64::consts::PI;
    let matrix = match kind {
        DstKind::DstI => {
            let scale = (2.0 / (n + 1.0)).sqrt();
            SquareMatrix::from_fn(side, |i, j| {
                scale * (pi * (i + 1) as f64 * (j + 1) as f64 / (n + 1.0)).sin()
            })
        }
        DstKind::DstII => SquareMatrix::from_fn(side, |i, j| {
            let c = if i + 1 == side { 1.0 / 2f64.sqrt() } else { 1.0 };
            (2.0 / n).sqrt() * c * (pi * (i + 1) as f64 * (2 * j + 1) as f64 / (2.0 * n)).sin()
        }),
    };
    Ok(Transform2D { matrix })
}

/// Orthonormal Haar matrix; the first row is the constant `1/sqrt(k)`.
pub fn haar_matrix(k: usize) -> Result<Transform1D> {
    if k == 0 || !k.is_power_of_two() {
        return Err(Error::InvalidParameter(format!(
            "Haar size must be a power of two, got {k}"
        )));
    }
    // H_{2n} = [H_n (x) (1, 1); I_n (x) (1, -1)] / sqrt(2)
    let mut rows: Vec<Vec<f64>> = vec![vec![1.0]];
    while rows.len() < k {
        let n = rows.len();
        let s = 1.0 / 2f64.sqrt();
        let mut next = Vec::with_capacity(2 * n);
        for row in &rows {
            next.push(row.iter().flat_map(|&v| [v * s, v * s]).collect());
        }
        for i in 0..n {
            let mut row = vec![0.0; 2 * n];
            row[2 * i] = s;
            row[2 * i + 1] = -s;
            next.push(row);
        }
        rows = next;
    }
    Ok(Transform1D {
        matrix: SquareMatrix::from_fn(k, |i, j| rows[i][j]),
    })
}

/// Groupwise 3-D transform built from `D2` (intrablock) and `D1` (interblock).
#[derive(Clone, Debug, PartialEq)]
pub struct GroupTransform {
    d2: Transform2D,
    d1: Transform1D,
}

impl GroupTransform {
    pub fn new(d2: Transform2D, d1: Transform1D) -> Self {
        Self { d2, d1 }
    }

    /// 2-D DST on blocks and Haar across the group.
    pub fn dst_haar(block_side: usize, group_size: usize, kind: DstKind) -> Result<Self> {
        Ok(Self::new(dst_matrix(block_side, kind)?, haar_matrix(group_size)?))
    }

    pub fn block_side(&self) -> usize {
        self.d2.side()
    }

    pub fn block_len(&self) -> usize {
        self.d2.side() * self.d2.side()
    }

    pub fn group_size(&self) -> usize {
        self.d1.len()
    }

    pub fn group_coeffs(&self) -> usize {
        self.block_len() * self.group_size()
    }

    pub fn d2(&self) -> &Transform2D {
        &self.d2
    }

    pub fn d1(&self) -> &Transform1D {
        &self.d1
    }

    /// `out = D Y D^T` (or `D^T Y D` when `transpose`) on one column-major block.
    fn block_2d(&self, block: &[f64], out: &mut [f64], tmp: &mut [f64], transpose: bool) {
        let n = self.d2.side();
        let m = &self.d2.matrix;
        let d = |i: usize, j: usize| if transpose { m.get(j, i) } else { m.get(i, j) };
        // tmp = D Y
        for c in 0..n {
            for i in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += d(i, k) * block[c * n + k];
                }
                tmp[c * n + i] = s;
            }
        }
        // out = tmp D^T
        for c in 0..n {
            for i in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += tmp[k * n + i] * d(c, k);
                }
                out[c * n + i] = s;
            }
        }
    }

    fn check(&self, input: &[f64], output: &[f64]) -> Result<()> {
        let len = self.group_coeffs();
        if input.len() != len {
            return Err(mismatch(len, input.len()));
        }
        if output.len() != len {
            return Err(mismatch(len, output.len()));
        }
        Ok(())
    }

    /// Forward 3-D transform of `K` concatenated block vectors into `spectrum`.
    pub fn forward_into(&self, blocks: &[f64], spectrum: &mut [f64]) -> Result<()> {
        self.check(blocks, spectrum)?;
        let nb = self.block_len();
        let k = self.group_size();
        let mut theta = vec![0.0; nb * k];
        let mut tmp = vec![0.0; nb];
        for j in 0..k {
            self.block_2d(&blocks[j * nb..(j + 1) * nb], &mut theta[j * nb..(j + 1) * nb], &mut tmp, false);
        }
        let d1 = &self.d1.matrix;
        for (col, out) in spectrum.chunks_exact_mut(nb).enumerate() {
            out.fill(0.0);
            for j in 0..k {
                let w = d1.get(col, j);
                if w != 0.0 {
                    for (o, t) in out.iter_mut().zip(&theta[j * nb..(j + 1) * nb]) {
                        *o += w * t;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn forward_3d(&self, blocks: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.group_coeffs()];
        self.forward_into(blocks, &mut out)?;
        Ok(out)
    }

    /// Inverse 3-D transform of one group spectrum into `K` block vectors.
    pub fn inverse_into(&self, spectrum: &[f64], blocks: &mut [f64]) -> Result<()> {
        self.check(spectrum, blocks)?;
        let nb = self.block_len();
        let k = self.group_size();
        let d1 = &self.d1.matrix;
        let mut theta = vec![0.0; nb];
        let mut tmp = vec![0.0; nb];
        for j in 0..k {
            theta.fill(0.0);
            for col in 0..k {
                let w = d1.get(col, j);
                if w != 0.0 {
                    for (t, s) in theta.iter_mut().zip(&spectrum[col * nb..(col + 1) * nb]) {
                        *t += w * s;
                    }
                }
            }
            self.block_2d(&theta, &mut blocks[j * nb..(j + 1) * nb], &mut tmp, true);
        }
        Ok(())
    }

    pub fn inverse_3d(&self, spectrum: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.group_coeffs()];
        self.inverse_into(spectrum, &mut out)?;
        Ok(out)
    }
}
