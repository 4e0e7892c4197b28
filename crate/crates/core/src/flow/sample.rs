use crate::error::{Error, Result};
use crate::raster::Image;

/// One axis of a bilinear lookup: the two texel indices, the blend weight of
/// `hi`, and whether the coordinate was inside the valid range before
/// clamping (outside it the derivative is zero).
#[derive(Clone, Copy, Debug)]
pub(crate) struct Tap {
    pub lo: usize,
    pub hi: usize,
    pub frac: f64,
    pub inside: bool,
}

impl Tap {
    /// Edge-clamped tap. At an exact interior texel coordinate the cell to
    /// the left is chosen (`frac == 1`), which keeps lattice lookups exact
    /// and fixes the one-sided derivative convention.
    #[inline]
    pub fn new(coord: f64, len: usize) -> Tap {
        let max = (len - 1) as f64;
        let inside = (0.0..=max).contains(&coord);
        let c = coord.clamp(0.0, max);
        let lo = if c > 0.0 { c.ceil() as usize - 1 } else { 0 };
        let hi = (lo + 1).min(len - 1);
        Tap {
            lo,
            hi,
            frac: c - lo as f64,
            inside,
        }
    }
}

/// Bilinear value of one channel of an interleaved raster.
#[inline]
pub(crate) fn sample_channel(
    data: &[f64],
    width: usize,
    channels: usize,
    channel: usize,
    tx: Tap,
    ty: Tap,
) -> f64 {
    let at = |r: usize, c: usize| data[(r * width + c) * channels + channel];
    let (fx, fy) = (tx.frac, ty.frac);
    at(ty.lo, tx.lo) * (1.0 - fx) * (1.0 - fy)
        + at(ty.lo, tx.hi) * fx * (1.0 - fy)
        + at(ty.hi, tx.lo) * (1.0 - fx) * fy
        + at(ty.hi, tx.hi) * fx * fy
}

/// Partial derivatives `(d/dx, d/dy)` of [`sample_channel`] with respect to
/// the sampling coordinates.
#[inline]
pub(crate) fn sample_channel_grad(
    data: &[f64],
    width: usize,
    channels: usize,
    channel: usize,
    tx: Tap,
    ty: Tap,
) -> (f64, f64) {
    let at = |r: usize, c: usize| data[(r * width + c) * channels + channel];
    let (v00, v01, v10, v11) = (
        at(ty.lo, tx.lo),
        at(ty.lo, tx.hi),
        at(ty.hi, tx.lo),
        at(ty.hi, tx.hi),
    );
    let gx = if tx.inside && tx.hi != tx.lo {
        (1.0 - ty.frac) * (v01 - v00) + ty.frac * (v11 - v10)
    } else {
        0.0
    };
    let gy = if ty.inside && ty.hi != ty.lo {
        (1.0 - tx.frac) * (v10 - v00) + tx.frac * (v11 - v01)
    } else {
        0.0
    };
    (gx, gy)
}

/// Samples every channel of `img` at the continuous position `(x, y)`
/// (`x` along columns, `y` along rows). Coordinates outside the image are
/// clamped to the border before blending.
pub fn sample_bilinear(img: &Image, x: f64, y: f64) -> Result<Vec<f64>> {
    if !x.is_finite() || !y.is_finite() {
        return Err(Error::NonFiniteCoordinate { x, y });
    }
    let tx = Tap::new(x, img.width());
    let ty = Tap::new(y, img.height());
    Ok((0..img.channels())
        .map(|ch| sample_channel(img.data(), img.width(), img.channels(), ch, tx, ty))
        .collect())
}
