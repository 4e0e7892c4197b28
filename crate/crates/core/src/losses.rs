//! Training losses on a predicted flow, each returning its value and the
//! analytic gradient with respect to the prediction.
//!
//! All three use mean reduction. Non-differentiable points (a zero residual
//! norm, the kink of `|x|`) get a zero subgradient; bilinear derivatives at
//! exact texel coordinates use the cell to the left.

use serde::{Deserialize, Serialize};

use crate::error::{check_dims, Error, Result};
use crate::flow::{check_stride, lattice_len, sample_channel, sample_channel_grad, ConsistencyMask, FlowField, Tap};
use crate::raster::Image;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossConfig {
    pub lambda_epe: f64,
    pub lambda_ms: f64,
    pub lambda_rec: f64,
    pub strides: Vec<usize>,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            lambda_epe: 1.5,
            lambda_ms: 15.0,
            lambda_rec: 1.0,
            strides: vec![2, 8, 32, 64],
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if [self.lambda_epe, self.lambda_ms, self.lambda_rec]
            .iter()
            .any(|l| !(*l >= 0.0) || !l.is_finite())
        {
            return Err(Error::InvalidParameter("loss weights must be finite and >= 0".into()));
        }
        if self.strides.contains(&0) {
            return Err(Error::InvalidParameter("strides must be positive".into()));
        }
        Ok(())
    }

    /// `lambda_epe * epe + lambda_ms * ms + lambda_rec * rec`.
    pub fn combine(&self, epe: f64, ms: f64, rec: f64) -> f64 {
        self.lambda_epe * epe + self.lambda_ms * ms + self.lambda_rec * rec
    }
}

/// A scalar loss and its gradient with respect to the predicted flow.
#[derive(Clone, Debug, PartialEq)]
pub struct LossValue {
    pub value: f64,
    pub gradient: FlowField,
}

fn check_mask(flow: &FlowField, mask: &ConsistencyMask) -> Result<()> {
    check_dims(flow.dims(), mask.dims())
}

/// Mean over pixels of `|mask(p) * (pred(p) - gt(p))|`.
pub fn epe_loss(pred: &FlowField, gt: &FlowField, mask: &ConsistencyMask) -> Result<LossValue> {
    check_dims(pred.dims(), gt.dims())?;
    check_mask(pred, mask)?;
    let n = pred.len() as f64;
    let mut value = 0.0;
    let mut gx = Vec::with_capacity(pred.len());
    let mut gy = Vec::with_capacity(pred.len());
    for (((px, py), (tx, ty)), &m) in pred.vectors().zip(gt.vectors()).zip(mask.values()) {
        let (rx, ry) = (px - tx, py - ty);
        let norm = rx.hypot(ry);
        value += m * norm;
        if norm > 0.0 && m > 0.0 {
            gx.push(m * rx / norm / n);
            gy.push(m * ry / norm / n);
        } else {
            gx.push(0.0);
            gy.push(0.0);
        }
    }
    let (h, w) = pred.dims();
    Ok(LossValue {
        value: value / n,
        gradient: FlowField::from_raw(h, w, gx, gy),
    })
}

/// Sum over strides and both axes of the mean masked norm of the
/// difference between predicted and ground-truth flow gradients on the
/// decimated lattice. The mask is decimated on the same lattice.
pub fn multiscale_loss(
    pred: &FlowField,
    gt: &FlowField,
    mask: &ConsistencyMask,
    cfg: &LossConfig,
) -> Result<LossValue> {
    cfg.validate()?;
    check_dims(pred.dims(), gt.dims())?;
    check_mask(pred, mask)?;
    let (h, w) = pred.dims();
    for &s in &cfg.strides {
        check_stride(s, (h, w))?;
    }
    let mut value = 0.0;
    let mut gx = vec![0.0; h * w];
    let mut gy = vec![0.0; h * w];
    for &s in &cfg.strides {
        let rows = lattice_len(h, s);
        let cols = lattice_len(w, s);
        for (dr, dc) in [(0usize, 1usize), (1, 0)] {
            let (out_rows, out_cols) = (rows - dr, cols - dc);
            let count = (out_rows * out_cols) as f64;
            for i in 0..out_rows {
                for j in 0..out_cols {
                    let a = (i * s) * w + j * s;
                    let b = ((i + dr) * s) * w + (j + dc) * s;
                    let ex = (pred.dx()[b] - pred.dx()[a]) - (gt.dx()[b] - gt.dx()[a]);
                    let ey = (pred.dy()[b] - pred.dy()[a]) - (gt.dy()[b] - gt.dy()[a]);
                    let m = mask.values()[a];
                    let norm = ex.hypot(ey);
                    value += m * norm / count;
                    if norm > 0.0 && m > 0.0 {
                        let (cx, cy) = (m * ex / norm / count, m * ey / norm / count);
                        gx[b] += cx;
                        gx[a] -= cx;
                        gy[b] += cy;
                        gy[a] -= cy;
                    }
                }
            }
        }
    }
    Ok(LossValue {
        value,
        gradient: FlowField::from_raw(h, w, gx, gy),
    })
}

/// Mean absolute difference between `warp_image(modified, pred)` and
/// `original`, over pixels and channels. The gradient flows through the
/// bilinear sampling weights.
pub fn reconstruction_loss(modified: &Image, pred: &FlowField, original: &Image) -> Result<LossValue> {
    check_dims(modified.dims(), pred.dims())?;
    check_dims(original.dims(), pred.dims())?;
    if modified.channels() != original.channels() {
        return Err(Error::InvalidParameter(format!(
            "channel mismatch: {} vs {}",
            modified.channels(),
            original.channels()
        )));
    }
    let (h, w) = pred.dims();
    let ch = modified.channels();
    let n = (h * w * ch) as f64;
    let mut value = 0.0;
    let mut gx = vec![0.0; h * w];
    let mut gy = vec![0.0; h * w];
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            let tx = Tap::new(c as f64 + pred.dx()[i], w);
            let ty = Tap::new(r as f64 + pred.dy()[i], h);
            for k in 0..ch {
                let res = sample_channel(modified.data(), w, ch, k, tx, ty) - original.get(r, c, k);
                value += res.abs();
                if res != 0.0 {
                    let sign = res.signum();
                    let (dsx, dsy) = sample_channel_grad(modified.data(), w, ch, k, tx, ty);
                    gx[i] += sign * dsx / n;
                    gy[i] += sign * dsy / n;
                }
            }
        }
    }
    Ok(LossValue {
        value: value / n,
        gradient: FlowField::from_raw(h, w, gx, gy),
    })
}

/// The three component losses and their weighted combination.
#[derive(Clone, Debug, PartialEq)]
pub struct TotalLoss {
    pub epe: LossValue,
    pub multiscale: LossValue,
    pub reconstruction: LossValue,
    pub total: LossValue,
}

pub fn total_loss(
    modified: &Image,
    pred: &FlowField,
    gt: &FlowField,
    mask: &ConsistencyMask,
    original: &Image,
    cfg: &LossConfig,
) -> Result<TotalLoss> {
    let epe = epe_loss(pred, gt, mask)?;
    let multiscale = multiscale_loss(pred, gt, mask, cfg)?;
    let reconstruction = reconstruction_loss(modified, pred, original)?;
    let value = cfg.combine(epe.value, multiscale.value, reconstruction.value);
    let (h, w) = pred.dims();
    let combine_plane = |a: &[f64], b: &[f64], c: &[f64]| -> Vec<f64> {
        a.iter()
            .zip(b)
            .zip(c)
            .map(|((x, y), z)| cfg.combine(*x, *y, *z))
            .collect()
    };
    let gradient = FlowField::from_raw(
        h,
        w,
        combine_plane(epe.gradient.dx(), multiscale.gradient.dx(), reconstruction.gradient.dx()),
        combine_plane(epe.gradient.dy(), multiscale.gradient.dy(), reconstruction.gradient.dy()),
    );
    Ok(TotalLoss {
        epe,
        multiscale,
        reconstruction,
        total: LossValue { value, gradient },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::warp_image;
    use crate::synth::{procedural_face, synthesize_example, SynthConfig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_flow(rng: &mut ChaCha8Rng, h: usize, w: usize, amp: f64) -> FlowField {
        FlowField::from_fn(h, w, |_, _| (rng.random_range(-amp..amp), rng.random_range(-amp..amp)))
    }

    #[test]
    fn weighted_sum_of_components() {
        let cfg = LossConfig::default();
        assert!((cfg.combine(1.0, 0.1, 0.2) - 3.2).abs() < 1e-12);
    }

    #[test]
    fn epe_unit_residual() {
        let gt = FlowField::zeros(5, 5);
        let pred = FlowField::constant(5, 5, 1.0, 0.0);
        let l = epe_loss(&pred, &gt, &ConsistencyMask::ones(5, 5)).unwrap();
        assert_eq!(l.value, 1.0);
        assert_eq!(epe_loss(&gt, &gt, &ConsistencyMask::ones(5, 5)).unwrap().value, 0.0);
    }

    #[test]
    fn multiscale_ignores_constant_offsets() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let gt = random_flow(&mut rng, 16, 16, 2.0);
        let shifted = FlowField::from_fn(16, 16, |r, c| {
            let (u, v) = gt.get(r, c);
            (u + 0.75, v - 1.5)
        });
        let cfg = LossConfig {
            strides: vec![2, 8],
            ..Default::default()
        };
        let m = ConsistencyMask::ones(16, 16);
        assert_eq!(multiscale_loss(&gt, &gt, &m, &cfg).unwrap().value, 0.0);
        assert!(multiscale_loss(&shifted, &gt, &m, &cfg).unwrap().value < 1e-12);
    }

    #[test]
    fn zero_mask_zeroes_flow_losses() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random_flow(&mut rng, 12, 12, 3.0);
        let b = random_flow(&mut rng, 12, 12, 3.0);
        let m = ConsistencyMask::zeros(12, 12);
        let cfg = LossConfig {
            strides: vec![2, 4],
            ..Default::default()
        };
        for l in [epe_loss(&a, &b, &m).unwrap(), multiscale_loss(&a, &b, &m, &cfg).unwrap()] {
            assert_eq!(l.value, 0.0);
            assert!(l.gradient.vectors().all(|(u, v)| u == 0.0 && v == 0.0));
        }
    }

    #[test]
    fn stride_too_large_errors() {
        let f = FlowField::zeros(16, 16);
        let r = multiscale_loss(&f, &f, &ConsistencyMask::ones(16, 16), &LossConfig::default());
        assert!(matches!(r, Err(Error::InvalidStride { .. })));
    }

    #[test]
    fn reconstruction_prefers_ground_truth_flow() {
        let (img, mesh) = procedural_face(64, 3);
        let ex = synthesize_example(&img, &mesh, 8, &SynthConfig::default()).unwrap();
        let at_gt = reconstruction_loss(&ex.warped, &ex.flow, &img).unwrap().value;
        let at_zero = reconstruction_loss(&ex.warped, &FlowField::zeros(64, 64), &img).unwrap().value;
        assert!(at_gt < at_zero);
        let same = reconstruction_loss(&img, &FlowField::zeros(64, 64), &img).unwrap();
        assert_eq!(same.value, 0.0);
        // value agrees with an explicit warp
        let warped = warp_image(&ex.warped, &ex.flow).unwrap();
        let direct: f64 = warped
            .data()
            .iter()
            .zip(img.data())
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            / img.data().len() as f64;
        assert!((direct - at_gt).abs() < 1e-12);
    }

    #[test]
    fn total_is_linear_in_each_weight() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let img = Image::from_fn(16, 16, 1, |_, _, _| rng.random::<f64>()).unwrap();
        let orig = Image::from_fn(16, 16, 1, |_, _, _| rng.random::<f64>()).unwrap();
        let pred = random_flow(&mut rng, 16, 16, 1.5);
        let gt = random_flow(&mut rng, 16, 16, 1.5);
        let mask = ConsistencyMask::ones(16, 16);
        let base = LossConfig {
            strides: vec![2, 8],
            ..Default::default()
        };
        let t = total_loss(&img, &pred, &gt, &mask, &orig, &base).unwrap();
        let doubled = LossConfig {
            lambda_ms: 2.0 * base.lambda_ms,
            ..base.clone()
        };
        let t2 = total_loss(&img, &pred, &gt, &mask, &orig, &doubled).unwrap();
        let expected = t.total.value + base.lambda_ms * t.multiscale.value;
        assert!((t2.total.value - expected).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_errors() {
        let a = FlowField::zeros(4, 4);
        let b = FlowField::zeros(4, 5);
        assert!(epe_loss(&a, &b, &ConsistencyMask::ones(4, 4)).is_err());
        assert!(epe_loss(&a, &a, &ConsistencyMask::ones(4, 5)).is_err());
        let img = Image::filled(4, 5, 1, 0.5).unwrap();
        assert!(reconstruction_loss(&img, &a, &img).is_err());
    }
}
