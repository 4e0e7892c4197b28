//! Synthetic manipulations with exact ground-truth flow.
//!
//! [`FalParams`] is a 16-parameter stand-in for the controls of a
//! landmark-driven face liquify tool (eye size, nose width, chin height and
//! so on). Each active parameter moves a handful of landmark handles; the
//! handle displacements are scattered into a dense, smooth field by summing
//! Gaussian bumps whose width scales with the inter-ocular distance.
//!
//! The vocabulary and the handle construction are our own. They aim at the
//! statistical character of such edits (smooth, local, grouped by facial
//! part) and do not replicate any particular tool.

mod face;
mod mesh;
mod random;

pub use face::procedural_face;
pub use mesh::{LandmarkGroup, LandmarkMesh};
pub use random::{make_noise_image, random_smooth_warp};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dims, Error, Result};
use crate::flow::{invert_flow, warp_image, FlowField, FlowInversion};
use crate::raster::Image;

/// Generator settings shared by the synthesizers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    /// Upper bound on the flow magnitude, in pixels.
    pub max_displacement: f64,
    /// Inclusive `[min, max]` number of simultaneously active parameters.
    pub active_param_count_range: [usize; 2],
    /// Gaussian bump width as a fraction of the inter-ocular distance.
    pub rbf_sigma_scale: f64,
    /// Handle displacement per unit parameter, as a fraction of the
    /// inter-ocular distance.
    pub handle_gain: f64,
    pub inversion_iters: usize,
    pub inversion_tol: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            max_displacement: 5.0,
            active_param_count_range: [2, 8],
            rbf_sigma_scale: 0.6,
            handle_gain: 0.1,
            inversion_iters: 30,
            inversion_tol: 1e-6,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.active_param_count_range;
        if !(self.max_displacement > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "max displacement {} must be > 0",
                self.max_displacement
            )));
        }
        if lo > hi || hi > FalParams::COUNT {
            return Err(Error::InvalidParameter(format!(
                "active parameter range [{lo}, {hi}] must satisfy min <= max <= 16"
            )));
        }
        if !(self.rbf_sigma_scale > 0.0) || !(self.handle_gain > 0.0) {
            return Err(Error::InvalidParameter(
                "rbf_sigma_scale and handle_gain must be > 0".into(),
            ));
        }
        if self.inversion_iters == 0 {
            return Err(Error::InvalidParameter("inversion_iters must be >= 1".into()));
        }
        Ok(())
    }
}

/// One of the sixteen warp controls.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FalParam {
    EyeSizeLeft,
    EyeSizeRight,
    EyeHeight,
    EyeWidth,
    EyeTilt,
    EyeDistance,
    NoseWidth,
    NoseHeight,
    MouthSmile,
    MouthWidth,
    MouthHeight,
    UpperLip,
    LowerLip,
    ForeheadHeight,
    ChinHeight,
    FaceWidth,
}

impl FalParam {
    pub const ALL: [FalParam; 16] = [
        FalParam::EyeSizeLeft,
        FalParam::EyeSizeRight,
        FalParam::EyeHeight,
        FalParam::EyeWidth,
        FalParam::EyeTilt,
        FalParam::EyeDistance,
        FalParam::NoseWidth,
        FalParam::NoseHeight,
        FalParam::MouthSmile,
        FalParam::MouthWidth,
        FalParam::MouthHeight,
        FalParam::UpperLip,
        FalParam::LowerLip,
        FalParam::ForeheadHeight,
        FalParam::ChinHeight,
        FalParam::FaceWidth,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FalParam::EyeSizeLeft => "eye_size_L",
            FalParam::EyeSizeRight => "eye_size_R",
            FalParam::EyeHeight => "eye_height",
            FalParam::EyeWidth => "eye_width",
            FalParam::EyeTilt => "eye_tilt",
            FalParam::EyeDistance => "eye_distance",
            FalParam::NoseWidth => "nose_width",
            FalParam::NoseHeight => "nose_height",
            FalParam::MouthSmile => "mouth_smile",
            FalParam::MouthWidth => "mouth_width",
            FalParam::MouthHeight => "mouth_height",
            FalParam::UpperLip => "upper_lip",
            FalParam::LowerLip => "lower_lip",
            FalParam::ForeheadHeight => "forehead_height",
            FalParam::ChinHeight => "chin_height",
            FalParam::FaceWidth => "face_width",
        }
    }

    /// Landmark groups this control acts on (the eyes are always needed to
    /// set the length scale).
    pub fn groups(self) -> &'static [LandmarkGroup] {
        use FalParam::*;
        use LandmarkGroup as G;
        match self {
            EyeSizeLeft | EyeSizeRight | EyeHeight | EyeWidth | EyeTilt | EyeDistance => {
                &[G::LeftEye, G::RightEye]
            }
            NoseWidth | NoseHeight => &[G::Nose],
            MouthSmile | MouthWidth | MouthHeight | UpperLip | LowerLip => &[G::Mouth],
            ForeheadHeight => &[G::Forehead],
            ChinHeight | FaceWidth => &[G::Jaw],
        }
    }
}

/// Sixteen named warp controls, each in `[-1, 1]`; zero means inactive.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FalParams {
    #[serde(rename = "eye_size_L")]
    pub eye_size_left: f64,
    #[serde(rename = "eye_size_R")]
    pub eye_size_right: f64,
    pub eye_height: f64,
    pub eye_width: f64,
    pub eye_tilt: f64,
    pub eye_distance: f64,
    pub nose_width: f64,
    pub nose_height: f64,
    pub mouth_smile: f64,
    pub mouth_width: f64,
    pub mouth_height: f64,
    pub upper_lip: f64,
    pub lower_lip: f64,
    pub forehead_height: f64,
    pub chin_height: f64,
    pub face_width: f64,
}

impl FalParams {
    pub const COUNT: usize = 16;

    /// Values in [`FalParam::ALL`] order.
    pub fn to_array(&self) -> [f64; 16] {
        [
            self.eye_size_left,
            self.eye_size_right,
            self.eye_height,
            self.eye_width,
            self.eye_tilt,
            self.eye_distance,
            self.nose_width,
            self.nose_height,
            self.mouth_smile,
            self.mouth_width,
            self.mouth_height,
            self.upper_lip,
            self.lower_lip,
            self.forehead_height,
            self.chin_height,
            self.face_width,
        ]
    }

    pub fn from_array(v: [f64; 16]) -> Result<Self> {
        if let Some(bad) = v.iter().find(|x| !(-1.0..=1.0).contains(*x)) {
            return Err(Error::InvalidParameter(format!(
                "parameter value {bad} outside [-1, 1]"
            )));
        }
        Ok(Self {
            eye_size_left: v[0],
            eye_size_right: v[1],
            eye_height: v[2],
            eye_width: v[3],
            eye_tilt: v[4],
            eye_distance: v[5],
            nose_width: v[6],
            nose_height: v[7],
            mouth_smile: v[8],
            mouth_width: v[9],
            mouth_height: v[10],
            upper_lip: v[11],
            lower_lip: v[12],
            forehead_height: v[13],
            chin_height: v[14],
            face_width: v[15],
        })
    }

    /// A single active control.
    pub fn single(param: FalParam, value: f64) -> Result<Self> {
        let mut v = [0.0; 16];
        let i = FalParam::ALL.iter().position(|&p| p == param).expect("listed");
        v[i] = value;
        Self::from_array(v)
    }

    pub fn validate(&self) -> Result<()> {
        Self::from_array(self.to_array()).map(|_| ())
    }

    pub fn get(&self, param: FalParam) -> f64 {
        let i = FalParam::ALL.iter().position(|&p| p == param).expect("listed");
        self.to_array()[i]
    }

    pub fn active(&self) -> impl Iterator<Item = (FalParam, f64)> + '_ {
        FalParam::ALL
            .into_iter()
            .zip(self.to_array())
            .filter(|&(_, v)| v != 0.0)
    }

    pub fn is_identity(&self) -> bool {
        self.active().next().is_none()
    }
}

/// Draws `k` distinct controls uniformly (with `k` uniform over the
/// configured inclusive range), each active value uniform in `[-1, 1]`.
pub fn sample_fal_params(seed: u64, cfg: &SynthConfig) -> Result<FalParams> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let [lo, hi] = cfg.active_param_count_range;
    let k = rng.random_range(lo..=hi);
    let mut values = [0.0; 16];
    for i in index::sample(&mut rng, FalParams::COUNT, k) {
        values[i] = rng.random_range(-1.0..=1.0);
    }
    FalParams::from_array(values)
}

/// A landmark handle: a location and the displacement it receives per unit
/// of its control.
#[derive(Clone, Copy, Debug)]
struct Handle {
    at: (f64, f64),
    disp: (f64, f64),
}

struct FaceFrame {
    left_eye: (f64, f64),
    right_eye: (f64, f64),
    /// Unit vector from the left to the right eye.
    across: (f64, f64),
    /// Unit vector pointing towards the forehead.
    up: (f64, f64),
    iod: f64,
}

impl FaceFrame {
    fn new(mesh: &LandmarkMesh) -> Result<Self> {
        let left_eye = mesh.centroid(LandmarkGroup::LeftEye)?;
        let right_eye = mesh.centroid(LandmarkGroup::RightEye)?;
        let iod = mesh.inter_ocular_distance()?;
        if !(iod > 0.0) {
            return Err(Error::InvalidMesh("eye centroids coincide".into()));
        }
        let across = ((right_eye.0 - left_eye.0) / iod, (right_eye.1 - left_eye.1) / iod);
        // rotate -90 degrees in image coordinates (y points down)
        let up = (across.1, -across.0);
        Ok(Self {
            left_eye,
            right_eye,
            across,
            up,
            iod,
        })
    }

    /// `a` units across the face plus `b` units up.
    fn along(&self, a: f64, b: f64) -> (f64, f64) {
        (
            a * self.across.0 + b * self.up.0,
            a * self.across.1 + b * self.up.1,
        )
    }

    fn dot_across(&self, from: (f64, f64), p: (f64, f64)) -> f64 {
        (p.0 - from.0) * self.across.0 + (p.1 - from.1) * self.across.1
    }

    fn dot_up(&self, from: (f64, f64), p: (f64, f64)) -> f64 {
        (p.0 - from.0) * self.up.0 + (p.1 - from.1) * self.up.1
    }

    fn mid_eyes(&self) -> (f64, f64) {
        (
            (self.left_eye.0 + self.right_eye.0) / 2.0,
            (self.left_eye.1 + self.right_eye.1) / 2.0,
        )
    }
}

/// Sign with a dead zone so landmarks on a symmetry axis stay put.
fn side(d: f64, iod: f64) -> f64 {
    if d.abs() < 1e-3 * iod {
        0.0
    } else {
        d.signum()
    }
}

fn handles(param: FalParam, mesh: &LandmarkMesh, f: &FaceFrame) -> Result<Vec<Handle>> {
    use FalParam::*;
    use LandmarkGroup as G;
    let dir = |a: f64, b: f64| f.along(a, b);
    let radial = |group: G, centre: (f64, f64), gain: f64| -> Result<Vec<Handle>> {
        Ok(mesh
            .group_points(group)?
            .into_iter()
            .map(|p| {
                let (dx, dy) = (p.0 - centre.0, p.1 - centre.1);
                let n = dx.hypot(dy).max(1e-9);
                Handle {
                    at: p,
                    disp: (gain * dx / n, gain * dy / n),
                }
            })
            .collect())
    };
    let spread = |group: G, gain: f64| -> Result<Vec<Handle>> {
        let centre = mesh.centroid(group)?;
        Ok(mesh
            .group_points(group)?
            .into_iter()
            .map(|p| {
                let s = side(f.dot_across(centre, p), f.iod);
                Handle {
                    at: p,
                    disp: dir(gain * s, 0.0),
                }
            })
            .collect())
    };
    let corners = || -> Result<((f64, f64), (f64, f64))> {
        let centre = mesh.centroid(G::Mouth)?;
        let pts = mesh.group_points(G::Mouth)?;
        let key = |p: &(f64, f64)| f.dot_across(centre, *p);
        let left = *pts.iter().min_by(|a, b| key(a).total_cmp(&key(b))).expect("non-empty");
        let right = *pts.iter().max_by(|a, b| key(a).total_cmp(&key(b))).expect("non-empty");
        Ok((left, right))
    };
    let hs = match param {
        EyeSizeLeft => radial(G::LeftEye, f.left_eye, 0.5)?,
        EyeSizeRight => radial(G::RightEye, f.right_eye, 0.5)?,
        EyeHeight => vec![
            Handle { at: f.left_eye, disp: dir(0.0, 0.5) },
            Handle { at: f.right_eye, disp: dir(0.0, 0.5) },
        ],
        EyeWidth => {
            let mut v = spread(G::LeftEye, 0.4)?;
            v.extend(spread(G::RightEye, 0.4)?);
            v
        }
        EyeTilt => vec![
            Handle { at: f.left_eye, disp: dir(0.0, 0.4) },
            Handle { at: f.right_eye, disp: dir(0.0, -0.4) },
        ],
        EyeDistance => vec![
            Handle { at: f.left_eye, disp: dir(-0.5, 0.0) },
            Handle { at: f.right_eye, disp: dir(0.5, 0.0) },
        ],
        NoseWidth => spread(G::Nose, 0.4)?,
        NoseHeight => vec![Handle {
            at: mesh.centroid(G::Nose)?,
            disp: dir(0.0, 0.5),
        }],
        MouthSmile => {
            let (l, r) = corners()?;
            vec![
                Handle { at: l, disp: dir(-0.2, 0.4) },
                Handle { at: r, disp: dir(0.2, 0.4) },
            ]
        }
        MouthWidth => {
            let (l, r) = corners()?;
            vec![
                Handle { at: l, disp: dir(-0.5, 0.0) },
                Handle { at: r, disp: dir(0.5, 0.0) },
            ]
        }
        MouthHeight => vec![Handle {
            at: mesh.centroid(G::Mouth)?,
            disp: dir(0.0, 0.5),
        }],
        UpperLip | LowerLip => {
            let centre = mesh.centroid(G::Mouth)?;
            let upper = param == UpperLip;
            let hs: Vec<Handle> = mesh
                .group_points(G::Mouth)?
                .into_iter()
                .filter(|&p| {
                    let d = f.dot_up(centre, p);
                    if upper {
                        d > 0.0
                    } else {
                        d < 0.0
                    }
                })
                .map(|p| Handle {
                    at: p,
                    disp: dir(0.0, if upper { 0.3 } else { -0.3 }),
                })
                .collect();
            if hs.is_empty() {
                return Err(Error::MissingLandmarkGroup(G::Mouth));
            }
            hs
        }
        ForeheadHeight => mesh
            .group_points(G::Forehead)?
            .into_iter()
            .map(|p| Handle { at: p, disp: dir(0.0, 0.5) })
            .collect(),
        ChinHeight => {
            let mid = f.mid_eyes();
            let chin = mesh
                .group_points(G::Jaw)?
                .into_iter()
                .min_by(|a, b| f.dot_up(mid, *a).total_cmp(&f.dot_up(mid, *b)))
                .expect("non-empty");
            vec![Handle { at: chin, disp: dir(0.0, -0.6) }]
        }
        FaceWidth => {
            let mid = f.mid_eyes();
            mesh.group_points(G::Jaw)?
                .into_iter()
                .map(|p| Handle {
                    at: p,
                    disp: dir(0.3 * side(f.dot_across(mid, p), f.iod), 0.0),
                })
                .collect()
        }
    };
    Ok(hs)
}

/// The dense field before the magnitude cap: a sum of Gaussian bumps, one
/// per handle, scaled by each control's value. Linear in every parameter.
pub fn params_to_flow_unscaled(
    params: &FalParams,
    mesh: &LandmarkMesh,
    cfg: &SynthConfig,
) -> Result<FlowField> {
    params.validate()?;
    let (h, w) = mesh.dims();
    if params.is_identity() {
        return Ok(FlowField::zeros(h, w));
    }
    let frame = FaceFrame::new(mesh)?;
    let gain = cfg.handle_gain * frame.iod;
    let sigma = cfg.rbf_sigma_scale * frame.iod;
    let denom = 2.0 * sigma * sigma;

    let mut dx = vec![0.0; h * w];
    let mut dy = vec![0.0; h * w];
    let mut gx = vec![0.0; w];
    let mut gy = vec![0.0; h];
    for (param, value) in params.active() {
        for hd in handles(param, mesh, &frame)? {
            let (ax, ay) = (hd.disp.0 * gain * value, hd.disp.1 * gain * value);
            if ax == 0.0 && ay == 0.0 {
                continue;
            }
            // exp(-|p - c|^2 / 2s^2) factors into a column and a row term
            for (c, g) in gx.iter_mut().enumerate() {
                *g = (-(c as f64 - hd.at.0).powi(2) / denom).exp();
            }
            for (r, g) in gy.iter_mut().enumerate() {
                *g = (-(r as f64 - hd.at.1).powi(2) / denom).exp();
            }
            for (r, &wy) in gy.iter().enumerate() {
                let row_x = &mut dx[r * w..(r + 1) * w];
                for (o, &wx) in row_x.iter_mut().zip(&gx) {
                    *o += ax * wx * wy;
                }
                let row_y = &mut dy[r * w..(r + 1) * w];
                for (o, &wx) in row_y.iter_mut().zip(&gx) {
                    *o += ay * wx * wy;
                }
            }
        }
    }
    Ok(FlowField::from_raw(h, w, dx, dy))
}

/// Original-to-modified flow for a parameter setting: the bump field of
/// [`params_to_flow_unscaled`], uniformly rescaled if its peak exceeds
/// `cfg.max_displacement`.
pub fn params_to_flow(params: &FalParams, mesh: &LandmarkMesh, cfg: &SynthConfig) -> Result<FlowField> {
    cfg.validate()?;
    let flow = params_to_flow_unscaled(params, mesh, cfg)?;
    Ok(cap_magnitude(flow, cfg.max_displacement))
}

pub(crate) fn cap_magnitude(flow: FlowField, limit: f64) -> FlowField {
    let peak = flow.max_magnitude();
    if peak > limit {
        // the product can land an ulp above the limit
        let mut scale = limit / peak;
        let mut out = flow.scaled(scale);
        while out.max_magnitude() > limit {
            scale *= 1.0 - 1e-12;
            out = flow.scaled(scale);
        }
        out
    } else {
        flow
    }
}

/// A synthesized manipulation.
#[derive(Clone, Debug)]
pub struct SynthExample {
    pub warped: Image,
    /// Original-to-modified flow: `warp_image(warped, flow) ≈ original`.
    pub flow: FlowField,
    /// Numeric inverse of `flow` used to render `warped`.
    pub backward: FlowInversion,
    pub params: FalParams,
}

/// Draws parameters from `seed`, builds the ground-truth flow and renders
/// the warped image with the flow's numeric inverse.
pub fn synthesize_example(
    img: &Image,
    mesh: &LandmarkMesh,
    seed: u64,
    cfg: &SynthConfig,
) -> Result<SynthExample> {
    check_dims(img.dims(), mesh.dims())?;
    let params = sample_fal_params(seed, cfg)?;
    synthesize_with_params(img, mesh, params, cfg)
}

pub fn synthesize_with_params(
    img: &Image,
    mesh: &LandmarkMesh,
    params: FalParams,
    cfg: &SynthConfig,
) -> Result<SynthExample> {
    check_dims(img.dims(), mesh.dims())?;
    let flow = params_to_flow(&params, mesh, cfg)?;
    let backward = invert_flow(&flow, cfg.inversion_iters, cfg.inversion_tol)?;
    let warped = warp_image(img, &backward.flow)?;
    Ok(SynthExample {
        warped,
        flow,
        backward,
        params,
    })
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable per-example seed from the global seed, an image id and a
/// repetition index. Independent of processing order.
pub fn derive_seed(global: u64, image_id: &str, rep: u32) -> u64 {
    // FNV-1a over the id
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in image_id.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    splitmix64(splitmix64(global ^ splitmix64(h)) ^ u64::from(rep))
}
