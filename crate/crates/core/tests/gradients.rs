//! Analytic loss gradients against central finite differences.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use warpforge::flow::{sample_bilinear, FlowField};
use warpforge::losses::{epe_loss, multiscale_loss, reconstruction_loss, total_loss, LossConfig};
use warpforge::{ConsistencyMask, Image};

const H: f64 = 1e-4;

fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale < 1e-9 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

struct Instance {
    pred: FlowField,
    gt: FlowField,
    mask: ConsistencyMask,
    modified: Image,
    original: Image,
}

fn instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = rng.random_range(4..=16);
    let w = rng.random_range(4..=16);
    let mut flow = |amp: f64| FlowField::from_fn(h, w, |_, _| (rng.random_range(-amp..amp), rng.random_range(-amp..amp)));
    let pred = flow(3.0);
    let gt = flow(3.0);
    let mask = ConsistencyMask::new(h, w, (0..h * w).map(|_| rng.random::<f64>()).collect()).unwrap();
    let ch = if rng.random_bool(0.5) { 3 } else { 1 };
    let modified = Image::from_fn(h, w, ch, |_, _, _| rng.random()).unwrap();
    let original = Image::from_fn(h, w, ch, |_, _, _| rng.random()).unwrap();
    Instance {
        pred,
        gt,
        mask,
        modified,
        original,
    }
}

fn perturbed(flow: &FlowField, i: usize, axis: usize, delta: f64) -> FlowField {
    let (mut dx, mut dy) = (flow.dx().to_vec(), flow.dy().to_vec());
    if axis == 0 {
        dx[i] += delta;
    } else {
        dy[i] += delta;
    }
    FlowField::new(flow.height(), flow.width(), dx, dy).unwrap()
}

fn strides_for(h: usize, w: usize) -> Vec<usize> {
    [1, 2, 3, 8].into_iter().filter(|&s| s < h.min(w)).collect()
}

/// Largest relative error between the analytic gradient and central
/// differences, over components accepted by `keep`.
fn check(
    pred: &FlowField,
    f: impl Fn(&FlowField) -> (f64, FlowField),
    mut keep: impl FnMut(usize, usize) -> bool,
) -> f64 {
    let (_, grad) = f(pred);
    let mut worst = 0.0f64;
    for i in 0..pred.len() {
        for axis in 0..2 {
            if !keep(i, axis) {
                continue;
            }
            let plus = f(&perturbed(pred, i, axis, H)).0;
            let minus = f(&perturbed(pred, i, axis, -H)).0;
            let fd = (plus - minus) / (2.0 * H);
            let a = if axis == 0 { grad.dx()[i] } else { grad.dy()[i] };
            worst = worst.max(rel_err(a, fd));
        }
    }
    worst
}

#[test]
fn epe_gradient_matches_finite_differences() {
    for seed in 0..20 {
        let t = instance(seed);
        let worst = check(
            &t.pred,
            |p| {
                let l = epe_loss(p, &t.gt, &t.mask).unwrap();
                (l.value, l.gradient)
            },
            |_, _| true,
        );
        assert!(worst <= 1e-4, "seed {seed}: {worst}");
    }
}

#[test]
fn multiscale_gradient_matches_finite_differences() {
    for seed in 0..20 {
        let t = instance(seed);
        let cfg = LossConfig {
            strides: strides_for(t.pred.height(), t.pred.width()),
            ..Default::default()
        };
        let worst = check(
            &t.pred,
            |p| {
                let l = multiscale_loss(p, &t.gt, &t.mask, &cfg).unwrap();
                (l.value, l.gradient)
            },
            |_, _| true,
        );
        assert!(worst <= 1e-4, "seed {seed}: {worst}");
    }
}

/// A component is smooth under a +-h perturbation when the sample stays in
/// one bilinear cell away from the clamp and no residual changes sign.
fn reconstruction_smooth(t: &Instance, i: usize, axis: usize) -> bool {
    let (h, w) = t.pred.dims();
    let (r, c) = (i / w, i % w);
    let (base, len, d) = if axis == 0 {
        (c as f64, w, t.pred.dx()[i])
    } else {
        (r as f64, h, t.pred.dy()[i])
    };
    let lo = base + d - H;
    let hi = base + d + H;
    if lo <= 0.0 || hi >= (len - 1) as f64 || lo.ceil() != hi.ceil() {
        return false;
    }
    let ch = t.modified.channels();
    let residuals = |delta: f64| -> Vec<f64> {
        let p = perturbed(&t.pred, i, axis, delta);
        let s = sample_bilinear(&t.modified, c as f64 + p.dx()[i], r as f64 + p.dy()[i]).unwrap();
        (0..ch).map(|k| s[k] - t.original.get(r, c, k)).collect()
    };
    let (a, b) = (residuals(-H), residuals(H));
    a.iter().zip(&b).all(|(x, y)| x.signum() == y.signum() && *x != 0.0)
}

#[test]
fn reconstruction_gradient_matches_finite_differences_away_from_kinks() {
    let mut checked = 0;
    for seed in 0..20 {
        let t = instance(seed);
        let worst = check(
            &t.pred,
            |p| {
                let l = reconstruction_loss(&t.modified, p, &t.original).unwrap();
                (l.value, l.gradient)
            },
            |i, axis| {
                let ok = reconstruction_smooth(&t, i, axis);
                checked += usize::from(ok);
                ok
            },
        );
        assert!(worst <= 1e-3, "seed {seed}: {worst}");
    }
    assert!(checked > 1000, "only {checked} components checked");
}

#[test]
fn total_gradient_is_weighted_sum() {
    let t = instance(99);
    let cfg = LossConfig {
        strides: strides_for(t.pred.height(), t.pred.width()),
        ..Default::default()
    };
    let total = total_loss(&t.modified, &t.pred, &t.gt, &t.mask, &t.original, &cfg).unwrap();
    let expect = cfg.lambda_epe * total.epe.value + cfg.lambda_ms * total.multiscale.value + cfg.lambda_rec * total.reconstruction.value;
    assert!((total.total.value - expect).abs() <= 1e-12 * expect.abs().max(1.0));
    for i in 0..t.pred.len() {
        let g = cfg.lambda_epe * total.epe.gradient.dx()[i]
            + cfg.lambda_ms * total.multiscale.gradient.dx()[i]
            + cfg.lambda_rec * total.reconstruction.gradient.dx()[i];
        assert!((total.total.gradient.dx()[i] - g).abs() <= 1e-12);
    }
}
