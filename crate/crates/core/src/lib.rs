//! BM3D frames and frame-based image deblurring.
//!
//! The BM3D grouping and its separable 3-D transform define an analysis
//! operator `Phi` (image to stacked group spectra) and a synthesis operator
//! `Psi` (spectra to image by weighted aggregation) with `Psi Phi = I`. This
//! crate exposes both, with their adjoints, as matrix-free operators and
//! builds three deblurring schemes on top of them: analysis and synthesis
//! augmented Lagrangian iterations and the decoupled IDD-BM3D iteration.

// `!(x > 0.0)` is used on purpose so NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algorithms;
pub mod blur;
pub mod error;
pub mod frames;
pub mod grouping;
pub mod image;
pub mod metrics;
pub mod shrinkage;
pub mod solvers;
pub mod transform;

pub use algorithms::{AlgoParams, IterationRecord, IterationTrace, Problem};
pub use blur::{apply_blur, simulate_observation, BlurOperator, NoiseSpec};
pub use error::{Error, Result};
pub use frames::{adaptive_weights, apply_phi, apply_phi_adjoint, apply_psi, apply_psi_adjoint, frame_bounds, FrameBounds, FramePair, GroupSpectrum, WeightMode};
pub use grouping::{block_match, coverage_map, extract_block, place_block_add, BlockGeometry, BlockPos, Grouping};
pub use image::Image;
pub use shrinkage::{threshold, ThresholdMode, ThresholdRule};
pub use transform::{dst_matrix, haar_matrix, DstKind, GroupTransform};
