//! Block matching and the block extract/place primitives.
//!
//! A block is identified by its top-left pixel. Its vector form lists the
//! block pixels column-major, like the image itself. Block indices used for
//! tie-breaking are the column-major linear index of the top-left pixel.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{mismatch, Error, Result};
use crate::image::Image;

/// Version tag written into grouping sidecar files.
pub const GROUPING_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BlockPos {
    pub row: usize,
    pub col: usize,
}

impl BlockPos {
    pub fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }

    /// Column-major linear index of the top-left pixel in an image of `height` rows.
    pub fn linear_index(&self, height: usize) -> usize {
        self.col * height + self.row
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockGeometry {
    pub block_side: usize,
    /// Distance between neighbouring reference blocks.
    pub step: usize,
    /// Candidates lie within this many pixels of the reference block, per axis.
    pub search_radius: usize,
    /// Blocks per group, `K`.
    pub group_size: usize,
}

impl Default for BlockGeometry {
    fn default() -> Self {
        Self {
            block_side: 4,
            step: 2,
            search_radius: 19,
            group_size: 8,
        }
    }
}

impl BlockGeometry {
    pub fn validate(&self) -> Result<()> {
        if self.block_side < 2 {
            return Err(Error::InvalidParameter(format!(
                "block side must be >= 2, got {}",
                self.block_side
            )));
        }
        if self.step == 0 || self.step > self.block_side {
            return Err(Error::InvalidParameter(format!(
                "step must be in 1..={}, got {}",
                self.block_side, self.step
            )));
        }
        if self.group_size == 0 {
            return Err(Error::InvalidParameter("group size must be >= 1".into()));
        }
        Ok(())
    }

    pub fn block_len(&self) -> usize {
        self.block_side * self.block_side
    }
}

fn check_block(height: usize, width: usize, pos: BlockPos, side: usize) -> Result<()> {
    if pos.row + side > height || pos.col + side > width {
        return Err(Error::BlockOutOfBounds {
            row: pos.row,
            col: pos.col,
            side,
            height,
            width,
        });
    }
    Ok(())
}

/// `P_j y`: copies the `side x side` block at `pos` into `out`, column-major.
pub fn extract_block_into(img: &Image, pos: BlockPos, side: usize, out: &mut [f64]) -> Result<()> {
    check_block(img.height(), img.width(), pos, side)?;
    if out.len() != side * side {
        return Err(mismatch(side * side, out.len()));
    }
    let data = img.as_slice();
    let h = img.height();
    for c in 0..side {
        let src = (pos.col + c) * h + pos.row;
        out[c * side..(c + 1) * side].copy_from_slice(&data[src..src + side]);
    }
    Ok(())
}

pub fn extract_block(img: &Image, pos: BlockPos, side: usize) -> Result<Vec<f64>> {
    let mut out = vec![0.0; side * side];
    extract_block_into(img, pos, side, &mut out)?;
    Ok(out)
}

/// `acc += P_j^T block`.
pub fn place_block_add(acc: &mut Image, block: &[f64], pos: BlockPos) -> Result<()> {
    let side = (block.len() as f64).sqrt().round() as usize;
    if side * side != block.len() {
        return Err(Error::InvalidParameter(format!(
            "block of length {} is not square",
            block.len()
        )));
    }
    check_block(acc.height(), acc.width(), pos, side)?;
    let h = acc.height();
    let data = acc.as_mut_slice();
    for c in 0..side {
        let dst = (pos.col + c) * h + pos.row;
        for (d, s) in data[dst..dst + side].iter_mut().zip(&block[c * side..(c + 1) * side]) {
            *d += s;
        }
    }
    Ok(())
}

/// The group set `J = {J_r}`: `R` groups of exactly `K` block positions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grouping {
    version: u32,
    height: usize,
    width: usize,
    block_side: usize,
    group_size: usize,
    /// Flattened `R x K` block positions.
    blocks: Vec<BlockPos>,
}

impl Grouping {
    /// Validates explicit groups. Coverage is not required here; frames check it.
    pub fn from_groups(
        height: usize,
        width: usize,
        block_side: usize,
        groups: Vec<Vec<BlockPos>>,
    ) -> Result<Self> {
        let group_size = groups
            .first()
            .map(|g| g.len())
            .ok_or_else(|| Error::InvalidGrouping("no groups".into()))?;
        if group_size == 0 {
            return Err(Error::InvalidGrouping("empty group".into()));
        }
        let mut blocks = Vec::with_capacity(groups.len() * group_size);
        for (r, group) in groups.into_iter().enumerate() {
            if group.len() != group_size {
                return Err(Error::InvalidGrouping(format!(
                    "group {r} has {} blocks, expected {group_size}",
                    group.len()
                )));
            }
            blocks.extend(group);
        }
        let g = Self {
            version: GROUPING_FORMAT_VERSION,
            height,
            width,
            block_side,
            group_size,
            blocks,
        };
        g.validate()?;
        Ok(g)
    }

    fn validate(&self) -> Result<()> {
        if self.version != GROUPING_FORMAT_VERSION {
            return Err(Error::InvalidGrouping(format!(
                "unsupported grouping version {}",
                self.version
            )));
        }
        if self.group_size == 0 || self.blocks.is_empty() || !self.blocks.len().is_multiple_of(self.group_size) {
            return Err(Error::InvalidGrouping("malformed group table".into()));
        }
        for (r, group) in self.groups().enumerate() {
            for (i, pos) in group.iter().enumerate() {
                check_block(self.height, self.width, *pos, self.block_side)?;
                if group[..i].contains(pos) {
                    return Err(Error::InvalidGrouping(format!(
                        "block ({}, {}) repeats within group {r}",
                        pos.row, pos.col
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn block_side(&self) -> usize {
        self.block_side
    }

    pub fn block_len(&self) -> usize {
        self.block_side * self.block_side
    }

    pub fn group_size(&self) -> usize {
        self.group_size
    }

    /// Number of groups `R`.
    pub fn len(&self) -> usize {
        self.blocks.len() / self.group_size
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn group(&self, r: usize) -> &[BlockPos] {
        &self.blocks[r * self.group_size..(r + 1) * self.group_size]
    }

    pub fn groups(&self) -> impl ExactSizeIterator<Item = &[BlockPos]> + '_ {
        self.blocks.chunks_exact(self.group_size)
    }

    /// Coefficients per group, `N_bl * K`.
    pub fn group_coeffs(&self) -> usize {
        self.block_len() * self.group_size
    }

    /// Total spectrum length `M = R * N_bl * K`.
    pub fn spectrum_len(&self) -> usize {
        self.len() * self.group_coeffs()
    }

    pub fn coverage(&self) -> Coverage {
        coverage_map(self)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let g: Grouping = serde_json::from_str(text)?;
        g.validate()?;
        Ok(g)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Per-pixel block-membership counts, the diagonal of `sum_r sum_j P_j^T P_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct Coverage {
    counts: Image,
}

impl Coverage {
    pub fn counts(&self) -> &Image {
        &self.counts
    }

    pub fn min(&self) -> f64 {
        self.counts.as_slice().iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.counts.as_slice().iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Every pixel belongs to at least one block.
    pub fn is_complete(&self) -> bool {
        self.min() >= 1.0
    }
}

pub fn coverage_map(grouping: &Grouping) -> Coverage {
    let (h, w) = grouping.dims();
    let side = grouping.block_side();
    let mut counts = Image::zeros(h, w);
    let ones = vec![1.0; side * side];
    for pos in &grouping.blocks {
        place_block_add(&mut counts, &ones, *pos).expect("grouping blocks are in bounds");
    }
    Coverage { counts }
}

/// Grid of reference positions along one axis: `0, step, 2 step, ...`, plus
/// the flush position `len - side` when the grid misses it.
fn reference_grid(len: usize, side: usize, step: usize) -> Vec<usize> {
    let last = len - side;
    let mut v: Vec<usize> = (0..=last).step_by(step).collect();
    if *v.last().unwrap() != last {
        v.push(last);
    }
    v
}

fn block_distance(img: &Image, a: BlockPos, b: BlockPos, side: usize) -> f64 {
    let h = img.height();
    let data = img.as_slice();
    let mut d = 0.0;
    for c in 0..side {
        let ia = (a.col + c) * h + a.row;
        let ib = (b.col + c) * h + b.row;
        for (x, y) in data[ia..ia + side].iter().zip(&data[ib..ib + side]) {
            d += (x - y) * (x - y);
        }
    }
    d
}

/// Groups similar blocks of `reference` by exhaustive search.
///
/// Each reference block on the step grid is grouped with the `K - 1` other
/// blocks in its search window closest in squared L2 distance. The reference
/// block comes first; the rest follow in order of `(distance, linear index)`.
/// If the window holds fewer than `K` blocks the whole image is searched.
pub fn block_match(reference: &Image, geom: &BlockGeometry) -> Result<Grouping> {
    geom.validate()?;
    let (h, w) = reference.dims();
    let side = geom.block_side;
    if h < side || w < side {
        return Err(Error::InvalidParameter(format!(
            "{h}x{w} image is smaller than a {side}x{side} block"
        )));
    }
    let (max_row, max_col) = (h - side, w - side);
    let k = geom.group_size;
    if (max_row + 1) * (max_col + 1) < k {
        return Err(Error::InvalidParameter(format!(
            "{h}x{w} image has fewer than {k} distinct blocks"
        )));
    }
    let rows = reference_grid(h, side, geom.step);
    let cols = reference_grid(w, side, geom.step);
    let refs: Vec<BlockPos> = cols
        .iter()
        .flat_map(|&c| rows.iter().map(move |&r| BlockPos::new(r, c)))
        .collect();

    let window = |center: usize, max: usize, radius: usize| {
        (center.saturating_sub(radius), (center + radius).min(max))
    };

    let blocks: Vec<Vec<BlockPos>> = refs
        .par_iter()
        .map(|&rpos| {
            let (mut r0, mut r1) = window(rpos.row, max_row, geom.search_radius);
            let (mut c0, mut c1) = window(rpos.col, max_col, geom.search_radius);
            if (r1 - r0 + 1) * (c1 - c0 + 1) < k {
                (r0, r1, c0, c1) = (0, max_row, 0, max_col);
            }
            let mut cands: Vec<(f64, usize, BlockPos)> = Vec::with_capacity((r1 - r0 + 1) * (c1 - c0 + 1));
            for c in c0..=c1 {
                for r in r0..=r1 {
                    let pos = BlockPos::new(r, c);
                    if pos == rpos {
                        continue;
                    }
                    let d = block_distance(reference, rpos, pos, side);
                    cands.push((d, pos.linear_index(h), pos));
                }
            }
            let by_key = |a: &(f64, usize, BlockPos), b: &(f64, usize, BlockPos)| {
                a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
            };
            if k > 1 && cands.len() > k - 1 {
                cands.select_nth_unstable_by(k - 2, by_key);
                cands.truncate(k - 1);
            }
            cands.sort_by(by_key);
            let mut group = Vec::with_capacity(k);
            group.push(rpos);
            group.extend(cands.iter().take(k - 1).map(|c| c.2));
            group
        })
        .collect();

    Grouping::from_groups(h, w, side, blocks)
}
