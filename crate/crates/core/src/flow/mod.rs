//! Flow fields and the primitives that act on them.

mod blur;
mod consistency;
mod discretize;
mod gradient;
mod sample;
mod warp;

pub use blur::{gaussian_blur, gaussian_blur_with, gaussian_kernel, Boundary};
pub use consistency::{consistency_mask, inconsistency_indicator, ConsistencyConfig, ConsistencyMask};
pub use discretize::{
    decode_class, discretize_flow, encode_class, undiscretize, FlowClassGrid, FLOW_CLASS_COUNT,
    FLOW_CLASS_CUTOFF,
};
pub use gradient::{flow_gradient, Axis};
pub(crate) use gradient::{check_stride, lattice_len};
pub use sample::sample_bilinear;
pub(crate) use sample::{sample_channel, sample_channel_grad, Tap};
pub use warp::{invert_flow, warp_flow, warp_image, FlowInversion};

use crate::error::{Error, Result};
use crate::raster::ScalarField;

/// Per-pixel displacement field in pixel units, stored as two row-major
/// planes.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowField {
    height: usize,
    width: usize,
    dx: Vec<f64>,
    dy: Vec<f64>,
}

impl FlowField {
    pub fn new(height: usize, width: usize, dx: Vec<f64>, dy: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidRaster(format!(
                "dimensions must be positive, got {height}x{width}"
            )));
        }
        let n = height * width;
        if dx.len() != n || dy.len() != n {
            return Err(Error::InvalidRaster(format!(
                "expected {n} displacements per component, got {} and {}",
                dx.len(),
                dy.len()
            )));
        }
        if dx.iter().chain(&dy).any(|v| !v.is_finite()) {
            return Err(Error::InvalidRaster("non-finite flow component".into()));
        }
        Ok(Self::from_raw(height, width, dx, dy))
    }

    pub(crate) fn from_raw(height: usize, width: usize, dx: Vec<f64>, dy: Vec<f64>) -> Self {
        debug_assert_eq!(dx.len(), height * width);
        debug_assert_eq!(dy.len(), height * width);
        Self {
            height,
            width,
            dx,
            dy,
        }
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self::constant(height, width, 0.0, 0.0)
    }

    pub fn constant(height: usize, width: usize, dx: f64, dy: f64) -> Self {
        let n = height * width;
        Self::from_raw(height, width, vec![dx; n], vec![dy; n])
    }

    /// `f(row, col)` returns `(dx, dy)`.
    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> (f64, f64)) -> Self {
        let n = height * width;
        let (mut dx, mut dy) = (Vec::with_capacity(n), Vec::with_capacity(n));
        for r in 0..height {
            for c in 0..width {
                let (u, v) = f(r, c);
                dx.push(u);
                dy.push(v);
            }
        }
        Self::from_raw(height, width, dx, dy)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn len(&self) -> usize {
        self.dx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dx.is_empty()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> (f64, f64) {
        let i = row * self.width + col;
        (self.dx[i], self.dy[i])
    }

    pub fn dx(&self) -> &[f64] {
        &self.dx
    }

    pub fn dy(&self) -> &[f64] {
        &self.dy
    }

    /// Pointwise `(dx, dy)` pairs in row-major order.
    pub fn vectors(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.dx.iter().copied().zip(self.dy.iter().copied())
    }

    pub fn scaled(&self, k: f64) -> FlowField {
        Self::from_raw(
            self.height,
            self.width,
            self.dx.iter().map(|v| v * k).collect(),
            self.dy.iter().map(|v| v * k).collect(),
        )
    }

    pub fn max_magnitude(&self) -> f64 {
        self.vectors().map(|(u, v)| u.hypot(v)).fold(0.0, f64::max)
    }

    /// The two components as single-channel planes.
    pub fn components(&self) -> (ScalarField, ScalarField) {
        (
            ScalarField::from_raw(self.height, self.width, self.dx.clone()),
            ScalarField::from_raw(self.height, self.width, self.dy.clone()),
        )
    }
}

/// Per-pixel Euclidean norm of the flow.
pub fn flow_magnitude(flow: &FlowField) -> ScalarField {
    ScalarField::from_raw(
        flow.height,
        flow.width,
        flow.vectors().map(|(u, v)| (u * u + v * v).sqrt()).collect(),
    )
}
