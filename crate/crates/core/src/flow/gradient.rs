use serde::{Deserialize, Serialize};

use super::FlowField;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Horizontal,
    Vertical,
}

pub(crate) fn check_stride(stride: usize, dims: (usize, usize)) -> Result<()> {
    let limit = dims.0.min(dims.1);
    if stride == 0 || stride >= limit {
        return Err(Error::InvalidStride {
            stride,
            limit,
            height: dims.0,
            width: dims.1,
        });
    }
    Ok(())
}

/// Lattice size after decimating `len` samples by `stride`.
#[inline]
pub(crate) fn lattice_len(len: usize, stride: usize) -> usize {
    (len - 1) / stride + 1
}

/// Forward differences of both flow components on the stride-`stride`
/// lattice.
///
/// The flow is first subsampled at `(i*stride, j*stride)`; differences are
/// then taken between neighbouring lattice points, so the result has one
/// fewer column (horizontal) or row (vertical) than the lattice.
pub fn flow_gradient(flow: &FlowField, stride: usize, axis: Axis) -> Result<FlowField> {
    check_stride(stride, flow.dims())?;
    let rows = lattice_len(flow.height(), stride);
    let cols = lattice_len(flow.width(), stride);
    let (out_rows, out_cols, (dr, dc)) = match axis {
        Axis::Horizontal => (rows, cols - 1, (0, 1)),
        Axis::Vertical => (rows - 1, cols, (1, 0)),
    };
    Ok(FlowField::from_fn(out_rows, out_cols, |i, j| {
        let (u0, v0) = flow.get(i * stride, j * stride);
        let (u1, v1) = flow.get((i + dr) * stride, (j + dc) * stride);
        (u1 - u0, v1 - v0)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_flow_has_zero_gradient() {
        let f = FlowField::constant(70, 70, 1.3, -2.0);
        for s in [2, 8, 32, 64] {
            for axis in [Axis::Horizontal, Axis::Vertical] {
                let g = flow_gradient(&f, s, axis).unwrap();
                assert!(g.vectors().all(|(u, v)| u == 0.0 && v == 0.0));
            }
        }
    }

    #[test]
    fn ramp_gives_stride() {
        let f = FlowField::from_fn(20, 33, |_, c| (c as f64, 0.0));
        for s in [2, 4, 8] {
            let g = flow_gradient(&f, s, Axis::Horizontal).unwrap();
            assert_eq!(g.width(), (33 - 1) / s);
            assert!(g.vectors().all(|(u, v)| u == s as f64 && v == 0.0));
            let gv = flow_gradient(&f, s, Axis::Vertical).unwrap();
            assert!(gv.vectors().all(|(u, v)| u == 0.0 && v == 0.0));
        }
    }

    #[test]
    fn affine_field_has_constant_gradient() {
        let f = FlowField::from_fn(40, 40, |r, c| (0.5 * r as f64 - 0.25 * c as f64 + 1.0, 2.0 * c as f64));
        let g = flow_gradient(&f, 8, Axis::Vertical).unwrap();
        assert!(g.vectors().all(|(u, v)| u == 4.0 && v == 0.0));
    }

    #[test]
    fn matches_elementwise_definition() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f = FlowField::from_fn(8, 8, |_, _| (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)));
        let h = flow_gradient(&f, 2, Axis::Horizontal).unwrap();
        let v = flow_gradient(&f, 2, Axis::Vertical).unwrap();
        assert_eq!(h.dims(), (4, 3));
        assert_eq!(v.dims(), (3, 4));
        for i in 0..4 {
            for j in 0..3 {
                let a = f.get(2 * i, 2 * j);
                let b = f.get(2 * i, 2 * j + 2);
                assert_eq!(h.get(i, j), (b.0 - a.0, b.1 - a.1));
            }
        }
        for i in 0..3 {
            for j in 0..4 {
                let a = f.get(2 * i, 2 * j);
                let b = f.get(2 * i + 2, 2 * j);
                assert_eq!(v.get(i, j), (b.0 - a.0, b.1 - a.1));
            }
        }
    }

    #[test]
    fn rejects_large_stride() {
        let f = FlowField::zeros(16, 32);
        assert!(matches!(
            flow_gradient(&f, 16, Axis::Horizontal),
            Err(Error::InvalidStride { .. })
        ));
        assert!(flow_gradient(&f, 0, Axis::Horizontal).is_err());
    }
}
