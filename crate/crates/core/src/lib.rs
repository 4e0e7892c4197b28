//! Flow-field mathematics and synthetic data for detecting face-warping edits.
//!
//! The crate is organized around three value types: [`Image`] (a raster of
//! samples in `[0, 1]`), [`FlowField`] (per-pixel displacements) and
//! [`ConsistencyMask`]. Flow convention throughout: for a flow `U` from image
//! `A` to image `B`, `B` sampled at `p + U(p)` corresponds to `A` at `p`, so
//! `warp_image(B, U) ≈ A`.
//!
//! Modules:
//! - [`flow`]: resampling, warping, inversion, consistency masks, gradients
//!   and the 121-class discretization.
//! - [`synth`]: parametric face warps, smooth random warps, noise images.
//! - [`losses`]: endpoint-error, multiscale-gradient and reconstruction
//!   losses with analytic gradients.
//! - [`metrics`]: PSNR, EPE, IOU, AP, 2AFC and accuracy.
//! - [`augment`]: flip/crop/resize/photometric/JPEG augmentation.
//! - [`io`]: `.flo`, `MSK1`, image and landmark file formats.
//! - [`render`]: flow-magnitude overlays and "undo" renders.

pub mod augment;
pub mod error;
pub mod flow;
pub mod io;
pub mod losses;
pub mod metrics;
pub mod raster;
pub mod render;
pub mod synth;

pub use error::{Error, Result};
pub use flow::{ConsistencyConfig, ConsistencyMask, FlowClassGrid, FlowField};
pub use raster::{Image, ScalarField};
