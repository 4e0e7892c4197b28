use thiserror::Error;

use crate::synth::LandmarkGroup;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("non-finite sampling coordinate ({x}, {y})")]
    NonFiniteCoordinate { x: f64, y: f64 },

    #[error("invalid raster: {0}")]
    InvalidRaster(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("stride {stride} must be in 1..{limit} for a {height}x{width} field")]
    InvalidStride {
        stride: usize,
        limit: usize,
        height: usize,
        width: usize,
    },

    #[error("flow class {0} out of range (must be < 121)")]
    InvalidClass(u32),

    #[error("landmark group `{0}` is required but missing or empty")]
    MissingLandmarkGroup(LandmarkGroup),

    #[error("invalid landmark mesh: {0}")]
    InvalidMesh(String),

    #[error("need at least one real and one fake sample")]
    SingleClass,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("malformed {format} data: {reason}")]
    Format { format: &'static str, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dims(expected: (usize, usize), actual: (usize, usize)) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}
