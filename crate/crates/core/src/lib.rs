//! Online background modelling and moving-object detection.
//!
//! A low-rank basis of the background is updated one frame at a time from
//! cumulative sufficient statistics. Foreground pixels are the contiguous
//! outliers of that model, found by combining a per-pixel Gaussian mixture over
//! the residual with an exact binary MRF segmentation (max-flow/min-cut).
//!
//! Module map:
//! - [`lowrank`]: basis initialization, coefficient solve, accumulators, basis descent
//! - [`residual`]: residuals, per-pixel residual mixture, outlier blend
//! - [`segmentation`]: grid MRF energy and its exact minimizer
//! - [`pipeline`]: the per-frame alternating loop
//! - [`motion`]: moving-camera warping, missing-pixel fill, affine registration
//! - [`bench`]: synthetic sequences, metrics, sweeps and a threshold baseline
//! - [`pgm`]: binary PGM frame and mask I/O

pub mod bench;
mod error;
mod frame;
mod linalg;
pub mod lowrank;
pub mod maxflow;
pub mod motion;
pub mod pgm;
pub mod pipeline;
pub mod residual;
pub mod segmentation;

pub use error::{Error, Result};
pub use frame::{ForegroundMask, Frame};
pub use pipeline::{Beta2Policy, EnergyTrace, FrameOutput, ModelState, Params};
