//! Benchmark curation and evaluation toolkit for occlusion-aware novel view
//! synthesis.
//!
//! - [`occluder`]: silhouette libraries and paired (clean, occluded) datasets
//! - [`maskplan`]: input-level and feature-level masking schedules
//! - [`poses`]: object-centric camera poses and named view sets
//! - [`metrics2d`]: PSNR / SSIM evaluation
//! - [`metrics3d`]: Chamfer distance and volume IoU on meshes
//! - [`harness`]: run directories, reports, and the CLI commands

pub mod error;
pub mod fsutil;
pub mod harness;
pub mod maskplan;
pub mod metrics2d;
pub mod metrics3d;
pub mod occluder;
pub mod parallel;
pub mod poses;
pub mod raster;
pub mod seed;

pub use error::{Error, Result};
