use super::sample::{sample_channel, Tap};
use super::FlowField;
use crate::error::{check_dims, Error, Result};
use crate::raster::{Image, ScalarField};

/// Backward-resamples `img` through `flow`: `out(p) = img(p + flow(p))`,
/// bilinear with edge clamping.
///
/// Unwarping a modified image with its original-to-modified flow recovers
/// the original up to interpolation error. A zero flow reproduces the input
/// bit for bit.
pub fn warp_image(img: &Image, flow: &FlowField) -> Result<Image> {
    check_dims(img.dims(), flow.dims())?;
    let (height, width, channels) = (img.height(), img.width(), img.channels());
    let mut out = Vec::with_capacity(img.data().len());
    for r in 0..height {
        for c in 0..width {
            let (u, v) = flow.get(r, c);
            let tx = Tap::new(c as f64 + u, width);
            let ty = Tap::new(r as f64 + v, height);
            for ch in 0..channels {
                out.push(sample_channel(img.data(), width, channels, ch, tx, ty));
            }
        }
    }
    Ok(Image::from_raw(height, width, channels, out))
}

fn warp_plane(plane: &[f64], height: usize, width: usize, by: &FlowField) -> Vec<f64> {
    let mut out = Vec::with_capacity(plane.len());
    for r in 0..height {
        for c in 0..width {
            let (u, v) = by.get(r, c);
            let tx = Tap::new(c as f64 + u, width);
            let ty = Tap::new(r as f64 + v, height);
            out.push(sample_channel(plane, width, 1, 0, tx, ty));
        }
    }
    out
}

/// Resamples each component of `flow_to_warp` through `by`, as if it were a
/// single-channel image: `out(p) = flow_to_warp(p + by(p))`.
pub fn warp_flow(flow_to_warp: &FlowField, by: &FlowField) -> Result<FlowField> {
    check_dims(flow_to_warp.dims(), by.dims())?;
    let (h, w) = by.dims();
    Ok(FlowField::from_raw(
        h,
        w,
        warp_plane(flow_to_warp.dx(), h, w, by),
        warp_plane(flow_to_warp.dy(), h, w, by),
    ))
}

/// Result of [`invert_flow`].
#[derive(Clone, Debug)]
pub struct FlowInversion {
    pub flow: FlowField,
    /// `|V(p) + U(p + V(p))|` for the returned `V`.
    pub residual: ScalarField,
    pub iterations: usize,
    pub converged: bool,
}

impl FlowInversion {
    pub fn mean_residual(&self) -> f64 {
        self.residual.mean()
    }

    pub fn max_residual(&self) -> f64 {
        self.residual.max()
    }
}

#[inline]
fn sample_flow(flow: &FlowField, x: f64, y: f64) -> (f64, f64) {
    let tx = Tap::new(x, flow.width());
    let ty = Tap::new(y, flow.height());
    (
        sample_channel(flow.dx(), flow.width(), 1, 0, tx, ty),
        sample_channel(flow.dy(), flow.width(), 1, 0, tx, ty),
    )
}

/// Numerically inverts `flow` by the fixed-point iteration
/// `V <- -flow(p + V(p))` starting from `V = 0`.
///
/// Stops once the maximum residual drops to `tol` or after `max_iters`
/// sweeps. Non-convergence is reported through [`FlowInversion::converged`].
pub fn invert_flow(flow: &FlowField, max_iters: usize, tol: f64) -> Result<FlowInversion> {
    if max_iters == 0 {
        return Err(Error::InvalidParameter("max_iters must be at least 1".into()));
    }
    if !(tol >= 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance {tol} must be >= 0")));
    }
    let (h, w) = flow.dims();
    let n = h * w;
    let mut current = FlowField::zeros(h, w);
    let mut residual = vec![0.0; n];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iters {
        iterations += 1;
        let mut dx = Vec::with_capacity(n);
        let mut dy = Vec::with_capacity(n);
        for r in 0..h {
            for c in 0..w {
                let (vx, vy) = current.get(r, c);
                let (ux, uy) = sample_flow(flow, c as f64 + vx, r as f64 + vy);
                dx.push(-ux);
                dy.push(-uy);
            }
        }
        let next = FlowField::from_raw(h, w, dx, dy);
        let mut worst: f64 = 0.0;
        for r in 0..h {
            for c in 0..w {
                let (vx, vy) = next.get(r, c);
                let (ux, uy) = sample_flow(flow, c as f64 + vx, r as f64 + vy);
                let res = (vx + ux).hypot(vy + uy);
                residual[r * w + c] = res;
                worst = worst.max(res);
            }
        }
        current = next;
        if worst <= tol {
            converged = true;
            break;
        }
    }
    Ok(FlowInversion {
        flow: current,
        residual: ScalarField::from_raw(h, w, residual),
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_image(h: usize, w: usize) -> Image {
        Image::from_fn(h, w, 3, |r, c, ch| ((r * 13 + c * 7 + ch * 5) % 17) as f64 / 16.0).unwrap()
    }

    fn smooth_flow(h: usize, w: usize, amp: f64) -> FlowField {
        let (cy, cx) = (h as f64 / 2.0, w as f64 / 2.0);
        let s2 = 2.0 * (w as f64 / 5.0).powi(2);
        FlowField::from_fn(h, w, |r, c| {
            let g = (-((r as f64 - cy).powi(2) + (c as f64 - cx).powi(2)) / s2).exp();
            (amp * g, -0.6 * amp * g)
        })
    }

    #[test]
    fn zero_flow_is_bit_identical() {
        let img = test_image(9, 11);
        assert_eq!(warp_image(&img, &FlowField::zeros(9, 11)).unwrap(), img);
    }

    #[test]
    fn unit_translation_shifts_with_edge_clamp() {
        let img = test_image(6, 8);
        let out = warp_image(&img, &FlowField::constant(6, 8, 1.0, 0.0)).unwrap();
        for r in 0..6 {
            for c in 0..8 {
                assert_eq!(out.pixel(r, c), img.pixel(r, (c + 1).min(7)));
            }
        }
    }

    #[test]
    fn integer_flow_equals_clamped_shift() {
        let img = test_image(7, 7);
        let out = warp_image(&img, &FlowField::constant(7, 7, -2.0, 3.0)).unwrap();
        for r in 0..7usize {
            for c in 0..7usize {
                let sr = (r + 3).min(6);
                let sc = c.saturating_sub(2);
                assert_eq!(out.pixel(r, c), img.pixel(sr, sc));
            }
        }
    }

    #[test]
    fn dimension_mismatch_errors() {
        let img = test_image(4, 4);
        assert!(matches!(
            warp_image(&img, &FlowField::zeros(4, 5)),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(warp_flow(&FlowField::zeros(3, 3), &FlowField::zeros(3, 4)).is_err());
    }

    #[test]
    fn warp_flow_identities() {
        let f = smooth_flow(10, 12, 2.0);
        assert_eq!(warp_flow(&f, &FlowField::zeros(10, 12)).unwrap(), f);
        let c = FlowField::constant(10, 12, 0.7, -1.2);
        let out = warp_flow(&c, &f).unwrap();
        for (u, v) in out.vectors() {
            assert!((u - 0.7).abs() < 1e-12 && (v + 1.2).abs() < 1e-12);
        }
    }

    #[test]
    fn opposite_constants_compose_to_zero() {
        let u_om = FlowField::constant(8, 8, 1.5, -0.5);
        let u_mo = FlowField::constant(8, 8, -1.5, 0.5);
        let composed = warp_flow(&u_mo, &u_om).unwrap();
        for ((a, b), (c, d)) in composed.vectors().zip(u_om.vectors()) {
            assert!((a + c).abs() < 1e-12 && (b + d).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_flow_inverts_in_one_step() {
        let inv = invert_flow(&FlowField::constant(5, 6, 2.5, -1.0), 10, 1e-9).unwrap();
        assert_eq!(inv.iterations, 1);
        assert!(inv.converged);
        assert_eq!(inv.flow, FlowField::constant(5, 6, -2.5, 1.0));
        let zero = invert_flow(&FlowField::zeros(3, 3), 5, 0.0).unwrap();
        assert_eq!(zero.flow, FlowField::zeros(3, 3));
    }

    #[test]
    fn smooth_flow_inverts_to_small_residual() {
        let f = smooth_flow(48, 48, 3.0);
        let inv = invert_flow(&f, 20, 1e-6).unwrap();
        // Oracle: evaluate |V(p) + U(p + V(p))| directly.
        let mut total = 0.0;
        for r in 0..48 {
            for c in 0..48 {
                let (vx, vy) = inv.flow.get(r, c);
                let (ux, uy) = sample_flow(&f, c as f64 + vx, r as f64 + vy);
                total += (vx + ux).hypot(vy + uy);
            }
        }
        assert!(total / (48.0 * 48.0) < 0.05);
        assert!(inv.mean_residual() < 0.05);
    }

    #[test]
    fn rejects_zero_iterations() {
        assert!(invert_flow(&FlowField::zeros(2, 2), 0, 0.1).is_err());
    }
}
