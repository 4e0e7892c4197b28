use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::mesh::{LandmarkGroup, LandmarkMesh};
use crate::flow::{sample_channel, Tap};
use crate::raster::Image;

/// Smooth value noise: a coarse random lattice upsampled bilinearly.
struct ValueNoise {
    cells: usize,
    data: Vec<f64>,
    scale: f64,
}

impl ValueNoise {
    fn new(rng: &mut ChaCha8Rng, cells: usize, size: usize) -> Self {
        let data = (0..cells * cells).map(|_| rng.random::<f64>() - 0.5).collect();
        Self {
            cells,
            data,
            scale: (cells - 1) as f64 / (size - 1).max(1) as f64,
        }
    }

    fn at(&self, x: f64, y: f64) -> f64 {
        let tx = Tap::new(x * self.scale, self.cells);
        let ty = Tap::new(y * self.scale, self.cells);
        sample_channel(&self.data, self.cells, 1, 0, tx, ty)
    }
}

fn smoothstep(e0: f64, e1: f64, x: f64) -> f64 {
    let t = ((x - e0) / (e1 - e0)).clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

#[derive(Clone, Copy)]
struct Ellipse {
    cx: f64,
    cy: f64,
    rx: f64,
    ry: f64,
}

impl Ellipse {
    /// Soft coverage in `[0, 1]` with an edge roughly `soft` pixels wide.
    fn coverage(&self, x: f64, y: f64, soft: f64) -> f64 {
        let d = ((x - self.cx) / self.rx).hypot((y - self.cy) / self.ry);
        let edge = soft / self.rx.min(self.ry);
        1.0 - smoothstep(1.0 - edge, 1.0 + edge, d)
    }

    fn point(&self, angle: f64) -> (f64, f64) {
        (self.cx + self.rx * angle.cos(), self.cy + self.ry * angle.sin())
    }
}

fn blend(dst: &mut [f64; 3], src: [f64; 3], alpha: f64) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d = *d * (1.0 - alpha) + s * alpha;
    }
}

/// Renders a textured cartoon face of `size x size` pixels together with its
/// landmark mesh.
///
/// Geometry, colours and texture are jittered by `seed`. The faces stand in
/// for a photo corpus in tests, benchmarks and demos: they give the warp
/// synthesizer smooth shading, sharp-ish feature edges and fine texture to
/// act on.
pub fn procedural_face(size: usize, seed: u64) -> (Image, LandmarkMesh) {
    let size = size.max(16);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = size as f64;
    let mut jit = |amount: f64| (rng.random::<f64>() - 0.5) * 2.0 * amount;

    let head = Ellipse {
        cx: s * (0.5 + jit(0.03)),
        cy: s * (0.54 + jit(0.03)),
        rx: s * (0.31 + jit(0.02)),
        ry: s * (0.40 + jit(0.02)),
    };
    let eye_dx = s * (0.135 + jit(0.015));
    let eye_y = head.cy - s * (0.08 + jit(0.015));
    let eye_r = (s * (0.055 + jit(0.008)), s * (0.026 + jit(0.004)));
    let eyes = [
        Ellipse { cx: head.cx - eye_dx, cy: eye_y, rx: eye_r.0, ry: eye_r.1 },
        Ellipse { cx: head.cx + eye_dx, cy: eye_y, rx: eye_r.0, ry: eye_r.1 },
    ];
    let iris_r = eye_r.1 * 0.9;
    let nose_tip = (head.cx + jit(0.01) * s, head.cy + s * (0.07 + jit(0.015)));
    let mouth = Ellipse {
        cx: head.cx + jit(0.01) * s,
        cy: head.cy + s * (0.2 + jit(0.02)),
        rx: s * (0.1 + jit(0.015)),
        ry: s * (0.028 + jit(0.006)),
    };
    let skin = [0.78 + jit(0.08), 0.6 + jit(0.08), 0.5 + jit(0.08)];
    let hair = [0.2 + jit(0.1), 0.13 + jit(0.08), 0.08 + jit(0.05)];
    let backdrop = [0.35 + jit(0.2), 0.45 + jit(0.2), 0.55 + jit(0.2)];
    let lips = [0.65 + jit(0.08), 0.28 + jit(0.06), 0.3 + jit(0.06)];

    let coarse = ValueNoise::new(&mut rng, 6, size);
    let medium = ValueNoise::new(&mut rng, 24, size);
    let fine = ValueNoise::new(&mut rng, (size / 3).max(4), size);
    let hairline = head.cy - head.ry * 0.62;

    let mut data = Vec::with_capacity(size * size * 3);
    for r in 0..size {
        for c in 0..size {
            let (x, y) = (c as f64, r as f64);
            let texture = 0.12 * coarse.at(x, y) + 0.06 * medium.at(x, y) + 0.05 * fine.at(x, y);
            let mut px = [
                backdrop[0] + texture + 0.1 * (y / s - 0.5),
                backdrop[1] + texture,
                backdrop[2] + texture - 0.1 * (x / s - 0.5),
            ];
            let face = head.coverage(x, y, 1.5);
            let shade = 1.0 - 0.25 * ((x - head.cx) / head.rx).powi(2);
            let skin_px = [
                (skin[0] + texture) * shade,
                (skin[1] + texture) * shade,
                (skin[2] + texture) * shade,
            ];
            blend(&mut px, skin_px, face);
            let hair_a = face * smoothstep(hairline + 3.0, hairline - 3.0, y);
            blend(&mut px, [hair[0] + texture, hair[1] + texture, hair[2] + texture], hair_a);
            for e in &eyes {
                let brow = Ellipse { cx: e.cx, cy: e.cy - e.ry * 2.6, rx: e.rx * 1.15, ry: e.ry * 0.45 };
                blend(&mut px, hair, 0.85 * brow.coverage(x, y, 1.2));
                blend(&mut px, [0.93, 0.92, 0.9], e.coverage(x, y, 1.0));
                let iris = Ellipse { cx: e.cx, cy: e.cy, rx: iris_r, ry: iris_r };
                blend(&mut px, [0.25, 0.18, 0.12], iris.coverage(x, y, 1.0) * e.coverage(x, y, 1.0));
            }
            // nose: a soft vertical ridge ending in two nostrils
            let ridge = (-(x - nose_tip.0 - s * 0.012).powi(2) / (2.0 * (s * 0.008).powi(2))).exp()
                * smoothstep(eye_y, eye_y + s * 0.03, y)
                * smoothstep(nose_tip.1 + 2.0, nose_tip.1 - 2.0, y);
            blend(&mut px, [skin[0] * 0.7, skin[1] * 0.65, skin[2] * 0.65], 0.5 * ridge);
            for side in [-1.0, 1.0] {
                let nostril = Ellipse { cx: nose_tip.0 + side * s * 0.03, cy: nose_tip.1, rx: s * 0.016, ry: s * 0.01 };
                blend(&mut px, [0.3, 0.18, 0.16], 0.8 * nostril.coverage(x, y, 1.0));
            }
            blend(&mut px, lips, mouth.coverage(x, y, 1.2));
            let split = (-(y - mouth.cy).powi(2) / 2.0).exp()
                * mouth.coverage(x, y, 1.2);
            blend(&mut px, [0.25, 0.08, 0.1], 0.7 * split);
            data.extend(px.iter().map(|v| v.clamp(0.0, 1.0)));
        }
    }
    let image = Image::from_raw(size, size, 3, data);

    let mut points = Vec::new();
    let mut groups = BTreeMap::new();
    let mut push = |group: LandmarkGroup, pts: Vec<(f64, f64)>| {
        let start = points.len();
        points.extend(pts);
        groups.insert(group, (start..points.len()).collect::<Vec<_>>());
    };
    push(
        LandmarkGroup::Jaw,
        (0..17).map(|i| head.point(i as f64 / 16.0 * PI)).collect(),
    );
    push(
        LandmarkGroup::Forehead,
        (0..5)
            .map(|i| {
                let (x, y) = head.point(PI + (0.3 + 0.1 * i as f64) * PI);
                (x, y + head.ry * 0.12)
            })
            .collect(),
    );
    for (group, e) in [(LandmarkGroup::LeftEye, eyes[0]), (LandmarkGroup::RightEye, eyes[1])] {
        push(group, (0..6).map(|i| e.point(i as f64 / 6.0 * 2.0 * PI)).collect());
    }
    let mut nose: Vec<(f64, f64)> = (0..4)
        .map(|i| (nose_tip.0, eye_y + (nose_tip.1 - eye_y) * (i as f64 + 0.5) / 4.0))
        .collect();
    nose.extend((0..5).map(|i| (nose_tip.0 + (i as f64 - 2.0) * s * 0.018, nose_tip.1 + s * 0.008)));
    push(LandmarkGroup::Nose, nose);
    push(
        LandmarkGroup::Mouth,
        (0..12).map(|i| mouth.point(i as f64 / 12.0 * 2.0 * PI)).collect(),
    );
    let max = (size - 1) as f64;
    for p in &mut points {
        p.0 = p.0.clamp(0.0, max);
        p.1 = p.1.clamp(0.0, max);
    }
    let mesh = LandmarkMesh::new(size, size, points, groups).expect("landmarks inside the image");
    (image, mesh)
}
