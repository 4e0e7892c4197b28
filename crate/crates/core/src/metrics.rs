//! Detection and localization metrics.
//!
//! Ranking metrics ([`average_precision`], [`two_afc`]) treat fakes as the
//! positive class and return ratios in `[0, 1]`; [`accuracy`] reports
//! percentages.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{check_dims, Error, Result};
use crate::flow::{warp_image, ConsistencyMask, FlowField};
use crate::raster::Image;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Real,
    Fake,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Real => "real",
            Label::Fake => "fake",
        })
    }
}

/// A classifier output: the predicted probability of manipulation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredSample {
    pub id: String,
    pub score: f64,
    pub label: Label,
}

impl ScoredSample {
    pub fn new(id: impl Into<String>, score: f64, label: Label) -> Self {
        Self {
            id: id.into(),
            score,
            label,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricConfig {
    /// Flow magnitude threshold for IOU, in pixels.
    pub iou_threshold: f64,
    pub psnr_peak: f64,
    /// PSNR reported for identical images.
    pub psnr_cap: f64,
    /// Scores at or above this are classified as fake.
    pub accuracy_threshold: f64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            iou_threshold: 3.0,
            psnr_peak: 1.0,
            psnr_cap: 99.0,
            accuracy_threshold: 0.5,
        }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.iou_threshold > 0.0) || !(self.psnr_cap > 0.0) || !(self.psnr_peak > 0.0) {
            return Err(Error::InvalidParameter(
                "iou_threshold, psnr_peak and psnr_cap must be > 0".into(),
            ));
        }
        Ok(())
    }
}

fn check_images(a: &Image, b: &Image) -> Result<()> {
    check_dims(a.dims(), b.dims())?;
    if a.channels() != b.channels() {
        return Err(Error::InvalidParameter(format!(
            "channel mismatch: {} vs {}",
            a.channels(),
            b.channels()
        )));
    }
    Ok(())
}

pub fn mse(a: &Image, b: &Image) -> Result<f64> {
    check_images(a, b)?;
    let sum: f64 = a.data().iter().zip(b.data()).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok(sum / a.data().len() as f64)
}

/// `10 log10(peak^2 / MSE)` in dB, capped at `cfg.psnr_cap`.
pub fn psnr(a: &Image, b: &Image, cfg: &MetricConfig) -> Result<f64> {
    let m = mse(a, b)?;
    if m == 0.0 {
        return Ok(cfg.psnr_cap);
    }
    Ok((10.0 * (cfg.psnr_peak * cfg.psnr_peak / m).log10()).min(cfg.psnr_cap))
}

/// `psnr(original, unwarped) - psnr(original, modified)`.
pub fn delta_psnr(original: &Image, modified: &Image, unwarped: &Image, cfg: &MetricConfig) -> Result<f64> {
    Ok(psnr(original, unwarped, cfg)? - psnr(original, modified, cfg)?)
}

/// Mean per-pixel Euclidean distance between two flows.
pub fn epe_metric(pred: &FlowField, gt: &FlowField) -> Result<f64> {
    check_dims(pred.dims(), gt.dims())?;
    let sum: f64 = pred
        .vectors()
        .zip(gt.vectors())
        .map(|((a, b), (c, d))| (a - c).hypot(b - d))
        .sum();
    Ok(sum / pred.len() as f64)
}

/// EPE weighted by a consistency mask, normalized by the mask mass.
/// `None` when the mask is identically zero.
pub fn masked_epe_metric(pred: &FlowField, gt: &FlowField, mask: &ConsistencyMask) -> Result<Option<f64>> {
    check_dims(pred.dims(), gt.dims())?;
    check_dims(pred.dims(), mask.dims())?;
    let mass: f64 = mask.values().iter().sum();
    if mass == 0.0 {
        return Ok(None);
    }
    let sum: f64 = pred
        .vectors()
        .zip(gt.vectors())
        .zip(mask.values())
        .map(|(((a, b), (c, d)), m)| m * (a - c).hypot(b - d))
        .sum();
    Ok(Some(sum / mass))
}

/// Intersection over union of `{|gt| >= tau}` and `{|pred| >= tau}`;
/// 1 when both sets are empty.
pub fn iou_at_threshold(pred: &FlowField, gt: &FlowField, tau: f64) -> Result<f64> {
    check_dims(pred.dims(), gt.dims())?;
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!("IOU threshold {tau} must be > 0")));
    }
    let (mut inter, mut union) = (0usize, 0usize);
    for ((a, b), (c, d)) in pred.vectors().zip(gt.vectors()) {
        let in_pred = a.hypot(b) >= tau;
        let in_gt = c.hypot(d) >= tau;
        inter += usize::from(in_pred && in_gt);
        union += usize::from(in_pred || in_gt);
    }
    if union == 0 {
        return Ok(1.0);
    }
    Ok(inter as f64 / union as f64)
}

fn check_finite(samples: &[ScoredSample]) -> Result<()> {
    if let Some(s) = samples.iter().find(|s| !s.score.is_finite()) {
        return Err(Error::InvalidParameter(format!("non-finite score for {}", s.id)));
    }
    Ok(())
}

/// Mean precision at the rank of each fake, ranking by descending score.
///
/// Ties keep input order (a stable sort), so among equal scores the sample
/// listed first is ranked first.
pub fn average_precision(samples: &[ScoredSample]) -> Result<f64> {
    check_finite(samples)?;
    let positives = samples.iter().filter(|s| s.label == Label::Fake).count();
    if positives == 0 || positives == samples.len() {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<&ScoredSample> = samples.iter().collect();
    order.sort_by(|a, b| b.score.total_cmp(&a.score));
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (rank, s) in order.iter().enumerate() {
        if s.label == Label::Fake {
            hits += 1;
            sum += hits as f64 / (rank + 1) as f64;
        }
    }
    Ok(sum / positives as f64)
}

/// Fraction of `(real_score, fake_score)` pairs in which the fake scores
/// higher; ties count one half.
pub fn two_afc(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::Empty("2AFC pairs"));
    }
    let wins: f64 = pairs
        .iter()
        .map(|&(real, fake)| {
            if fake > real {
                1.0
            } else if fake == real {
                0.5
            } else {
                0.0
            }
        })
        .sum();
    Ok(wins / pairs.len() as f64)
}

/// Thresholded accuracy in percent. Per-class entries are `None` when the
/// class is absent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Accuracy {
    pub threshold: f64,
    pub total: f64,
    pub orig: Option<f64>,
    #[serde(rename = "mod")]
    pub modified: Option<f64>,
}

pub fn accuracy(samples: &[ScoredSample], threshold: f64) -> Result<Accuracy> {
    if samples.is_empty() {
        return Err(Error::Empty("scored samples"));
    }
    check_finite(samples)?;
    let (mut real_ok, mut real_n, mut fake_ok, mut fake_n) = (0usize, 0usize, 0usize, 0usize);
    for s in samples {
        let says_fake = s.score >= threshold;
        match s.label {
            Label::Real => {
                real_n += 1;
                real_ok += usize::from(!says_fake);
            }
            Label::Fake => {
                fake_n += 1;
                fake_ok += usize::from(says_fake);
            }
        }
    }
    let pct = |ok: usize, n: usize| (n > 0).then(|| 100.0 * ok as f64 / n as f64);
    Ok(Accuracy {
        threshold,
        total: 100.0 * (real_ok + fake_ok) as f64 / samples.len() as f64,
        orig: pct(real_ok, real_n),
        modified: pct(fake_ok, fake_n),
    })
}

/// Accuracy at the observed score that maximizes total accuracy (the lowest
/// such score on ties).
pub fn best_threshold_accuracy(samples: &[ScoredSample]) -> Result<Accuracy> {
    if samples.is_empty() {
        return Err(Error::Empty("scored samples"));
    }
    check_finite(samples)?;
    let mut candidates: Vec<f64> = samples.iter().map(|s| s.score).collect();
    candidates.push(f64::INFINITY);
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    let mut best: Option<Accuracy> = None;
    for t in candidates {
        let a = accuracy(samples, t)?;
        if best.map_or(true, |b| a.total > b.total) {
            best = Some(a);
        }
    }
    Ok(best.expect("at least one candidate"))
}

/// PSNR of `warp_image(modified, k * flow)` against `original` for each
/// scale `k`.
pub fn psnr_scale_sweep(
    original: &Image,
    modified: &Image,
    flow: &FlowField,
    scales: &[f64],
    cfg: &MetricConfig,
) -> Result<Vec<(f64, f64)>> {
    if scales.is_empty() {
        return Err(Error::Empty("scales"));
    }
    check_images(original, modified)?;
    scales
        .iter()
        .map(|&k| {
            let unwarped = warp_image(modified, &flow.scaled(k))?;
            Ok((k, psnr(original, &unwarped, cfg)?))
        })
        .collect()
}
