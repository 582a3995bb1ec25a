//! Blur scenarios, test images, experiment orchestration and result tables
//! for the deblurring algorithms in `bm3d_frames`.

pub mod config;
pub mod error;
pub mod experiment;
pub mod images;
pub mod scenario;
pub mod suite;
pub mod table;
pub mod tune;
pub mod verify;
