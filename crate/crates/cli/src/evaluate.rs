//! Scoring external predictions against a generated dataset.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use warpforge::io::{load_image, read_flo, read_msk};
use warpforge::metrics::{
    accuracy, average_precision, best_threshold_accuracy, epe_metric, iou_at_threshold, masked_epe_metric, psnr,
    two_afc, Accuracy, Label, MetricConfig, ScoredSample,
};
use warpforge::flow::{flow_magnitude, warp_image};

use crate::manifest::DatasetManifest;

/// Per-entry sampling weights that equalize the expected label frequencies:
/// real entries get `fake_count / real_count`, fakes get 1.
pub fn balanced_iteration_weights(manifest: &DatasetManifest) -> Result<Vec<f64>> {
    let real = manifest.count(Label::Real);
    let fake = manifest.count(Label::Fake);
    if real == 0 || fake == 0 {
        return Err(warpforge::Error::SingleClass.into());
    }
    let w = fake as f64 / real as f64;
    Ok(manifest
        .entries
        .iter()
        .map(|e| if e.label == Label::Real { w } else { 1.0 })
        .collect())
}

#[derive(Debug, Deserialize)]
struct ScoreRow {
    id: String,
    score: f64,
    #[serde(default)]
    label: Option<Label>,
}

/// External model outputs: detector scores and/or predicted flows.
#[derive(Clone, Debug, Default)]
pub struct EvalBundle {
    pub scores: Option<BTreeMap<String, f64>>,
    /// Directory holding `<entry id>.flo` for fake entries.
    pub flow_dir: Option<PathBuf>,
}

impl EvalBundle {
    /// Loads a score CSV with columns `id,score` and an optional `label`
    /// column, which must agree with the manifest when present.
    pub fn load_scores(path: &Path, manifest: &DatasetManifest) -> Result<BTreeMap<String, f64>> {
        let mut reader = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
        let mut scores = BTreeMap::new();
        for row in reader.deserialize() {
            let row: ScoreRow = row?;
            let entry = manifest
                .get(&row.id)
                .with_context(|| format!("score for unknown id {:?}", row.id))?;
            if let Some(label) = row.label {
                if label != entry.label {
                    bail!("label for {:?} is {label}, manifest says {}", row.id, entry.label);
                }
            }
            if !row.score.is_finite() {
                bail!("non-finite score for {:?}", row.id);
            }
            if scores.insert(row.id.clone(), row.score).is_some() {
                bail!("duplicate score for {:?}", row.id);
            }
        }
        Ok(scores)
    }

    pub fn flow_path(&self, id: &str) -> Option<PathBuf> {
        self.flow_dir.as_ref().map(|d| d.join(format!("{id}.flo")))
    }
}

/// Real-or-fake classification results, percentages throughout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub samples: usize,
    /// Accuracy at the configured threshold.
    pub accuracy_at_threshold: Accuracy,
    /// Accuracy at the threshold that maximizes it on these scores.
    pub accuracy_best_threshold: Accuracy,
    pub ap: f64,
    pub two_afc: f64,
    pub pairs: usize,
}

/// Warp localization and undoing results, averaged over fake entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizationReport {
    pub samples: usize,
    pub epe: f64,
    /// EPE weighted by the consistency mask; `None` if no entry has mask mass.
    pub masked_epe: Option<f64>,
    pub iou_tau: f64,
    /// Mean IOU over entries whose ground truth reaches `iou_tau` somewhere.
    pub iou: Option<f64>,
    pub iou_samples: usize,
    pub psnr_modified: f64,
    pub psnr_unwarped: f64,
    pub delta_psnr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntryReport {
    pub id: String,
    pub label: Label,
    pub score: Option<f64>,
    pub epe: Option<f64>,
    pub masked_epe: Option<f64>,
    pub iou: Option<f64>,
    pub delta_psnr: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub real: usize,
    pub fake: usize,
    pub detection: Option<DetectionReport>,
    pub localization: Option<LocalizationReport>,
    pub entries: Vec<EntryReport>,
}

fn detection(manifest: &DatasetManifest, scores: &BTreeMap<String, f64>, cfg: &MetricConfig) -> Result<Option<DetectionReport>> {
    let missing: Vec<&str> = manifest
        .entries
        .iter()
        .filter(|e| !scores.contains_key(&e.id))
        .map(|e| e.id.as_str())
        .collect();
    if !missing.is_empty() {
        warn!("{} entries lack scores (first: {}); omitting detection metrics", missing.len(), missing[0]);
        return Ok(None);
    }
    let samples: Vec<ScoredSample> = manifest
        .entries
        .iter()
        .map(|e| ScoredSample::new(e.id.clone(), scores[&e.id], e.label))
        .collect();
    if manifest.count(Label::Real) == 0 || manifest.count(Label::Fake) == 0 {
        warn!("manifest has a single class; omitting detection metrics");
        return Ok(None);
    }
    // each fake against its own original
    let mut pairs = Vec::new();
    for e in manifest.entries.iter().filter(|e| e.label == Label::Fake) {
        match manifest.original_of(&e.image_id) {
            Some(orig) => pairs.push((scores[&orig.id], scores[&e.id])),
            None => warn!("no original for {}; left out of 2AFC", e.id),
        }
    }
    Ok(Some(DetectionReport {
        samples: samples.len(),
        accuracy_at_threshold: accuracy(&samples, cfg.accuracy_threshold)?,
        accuracy_best_threshold: best_threshold_accuracy(&samples)?,
        ap: 100.0 * average_precision(&samples)?,
        two_afc: if pairs.is_empty() { f64::NAN } else { 100.0 * two_afc(&pairs)? },
        pairs: pairs.len(),
    }))
}

struct FlowScores {
    epe: f64,
    masked_epe: Option<f64>,
    iou: Option<f64>,
    psnr_modified: f64,
    psnr_unwarped: f64,
}

fn score_flow(root: &Path, entry: &crate::manifest::ManifestEntry, pred_path: &Path, cfg: &MetricConfig) -> Result<FlowScores> {
    let gt_path = entry.flow_path.as_ref().expect("validated fake entry");
    let gt = read_flo(root.join(gt_path))?;
    let pred = read_flo(pred_path).with_context(|| format!("reading {}", pred_path.display()))?;
    let original = load_image(root.join(&entry.original_path))?;
    let modified = load_image(root.join(entry.scored_path()))?;
    let unwarped = warp_image(&modified, &pred)?;
    let masked_epe = match &entry.mask_path {
        Some(p) => masked_epe_metric(&pred, &gt, &read_msk(root.join(p))?)?,
        None => None,
    };
    let has_region = flow_magnitude(&gt).max() >= cfg.iou_threshold;
    Ok(FlowScores {
        epe: epe_metric(&pred, &gt)?,
        masked_epe,
        iou: if has_region { Some(iou_at_threshold(&pred, &gt, cfg.iou_threshold)?) } else { None },
        psnr_modified: psnr(&original, &modified, cfg)?,
        psnr_unwarped: psnr(&original, &unwarped, cfg)?,
    })
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Computes detection metrics from the bundle's scores and localization
/// metrics from its flows. A section is omitted, with a warning, when its
/// predictions are missing for any entry.
///
/// `root` is the directory the manifest's paths are relative to.
pub fn evaluate(manifest: &DatasetManifest, root: &Path, bundle: &EvalBundle, cfg: &MetricConfig) -> Result<EvalReport> {
    cfg.validate()?;
    let detection = match &bundle.scores {
        Some(scores) => {
            if let Some(id) = scores.keys().find(|id| manifest.get(id).is_none()) {
                bail!("prediction id {id:?} is not in the manifest");
            }
            detection(manifest, scores, cfg)?
        }
        None => None,
    };

    let fakes: Vec<_> = manifest.entries.iter().filter(|e| e.label == Label::Fake).collect();
    let mut flow_scores: BTreeMap<&str, FlowScores> = BTreeMap::new();
    let mut localization = None;
    if bundle.flow_dir.is_some() {
        let missing: Vec<&str> = fakes
            .iter()
            .filter(|e| !bundle.flow_path(&e.id).is_some_and(|p| p.is_file()))
            .map(|e| e.id.as_str())
            .collect();
        if !missing.is_empty() {
            warn!("{} fake entries lack predicted flows (first: {}); omitting localization metrics", missing.len(), missing[0]);
        } else if fakes.is_empty() {
            warn!("no fake entries; omitting localization metrics");
        } else {
            let results: Vec<Result<FlowScores>> = fakes
                .par_iter()
                .map(|e| score_flow(root, e, &bundle.flow_path(&e.id).expect("flow dir set"), cfg))
                .collect();
            for (e, r) in fakes.iter().zip(results) {
                flow_scores.insert(e.id.as_str(), r.with_context(|| format!("scoring {}", e.id))?);
            }
            let all = || flow_scores.values();
            let iou_values: Vec<f64> = all().filter_map(|s| s.iou).collect();
            let psnr_modified = mean(all().map(|s| s.psnr_modified)).expect("non-empty");
            let psnr_unwarped = mean(all().map(|s| s.psnr_unwarped)).expect("non-empty");
            localization = Some(LocalizationReport {
                samples: flow_scores.len(),
                epe: mean(all().map(|s| s.epe)).expect("non-empty"),
                masked_epe: mean(all().filter_map(|s| s.masked_epe)),
                iou_tau: cfg.iou_threshold,
                iou: mean(iou_values.iter().copied()),
                iou_samples: iou_values.len(),
                psnr_modified,
                psnr_unwarped,
                delta_psnr: mean(all().map(|s| s.psnr_unwarped - s.psnr_modified)).expect("non-empty"),
            });
        }
    }

    let entries = manifest
        .entries
        .iter()
        .map(|e| {
            let fs = flow_scores.get(e.id.as_str());
            EntryReport {
                id: e.id.clone(),
                label: e.label,
                score: bundle.scores.as_ref().and_then(|s| s.get(&e.id).copied()),
                epe: fs.map(|s| s.epe),
                masked_epe: fs.and_then(|s| s.masked_epe),
                iou: fs.and_then(|s| s.iou),
                delta_psnr: fs.map(|s| s.psnr_unwarped - s.psnr_modified),
            }
        })
        .collect();
    Ok(EvalReport {
        real: manifest.count(Label::Real),
        fake: fakes.len(),
        detection,
        localization,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifest::{ManifestEntry, Split};

    fn entry(id: &str, label: Label) -> ManifestEntry {
        let fake = label == Label::Fake;
        ManifestEntry {
            id: id.into(),
            image_id: id.split('.').next().unwrap().into(),
            label,
            split: Split::Test,
            original_path: "o.png".into(),
            warped_path: fake.then(|| "w.png".into()),
            flow_path: fake.then(|| "f.flo".into()),
            mask_path: None,
            params: None,
            seed: None,
            augment_spec: None,
        }
    }

    fn manifest(real: usize, fake: usize) -> DatasetManifest {
        let mut v: Vec<_> = (0..real).map(|i| entry(&format!("r{i}.real"), Label::Real)).collect();
        v.extend((0..fake).map(|i| entry(&format!("r0.fake{i}"), Label::Fake)));
        DatasetManifest::new(v).unwrap()
    }

    #[test]
    fn weights_one_real_six_fakes() {
        let m = manifest(1, 6);
        let w = balanced_iteration_weights(&m).unwrap();
        for (e, w) in m.entries.iter().zip(&w) {
            assert_eq!(*w, if e.label == Label::Real { 6.0 } else { 1.0 });
        }
        assert!(balanced_iteration_weights(&manifest(2, 2)).unwrap().iter().all(|&w| w == 1.0));
    }

    #[test]
    fn weights_equalize_label_mass() {
        for (r, f) in [(3, 7), (5, 2), (1, 13)] {
            let m = manifest(r, f);
            let w = balanced_iteration_weights(&m).unwrap();
            let mass = |label| -> f64 { m.entries.iter().zip(&w).filter(|(e, _)| e.label == label).map(|(_, w)| w).sum() };
            assert!((mass(Label::Real) - mass(Label::Fake)).abs() < 1e-12);
        }
    }

    #[test]
    fn weights_single_class_errors() {
        let err = balanced_iteration_weights(&manifest(0, 3)).unwrap_err();
        assert!(matches!(err.downcast_ref::<warpforge::Error>(), Some(warpforge::Error::SingleClass)));
    }

    #[test]
    fn unknown_score_id_is_an_error() {
        let m = manifest(1, 1);
        let mut scores: BTreeMap<String, f64> = m.entries.iter().map(|e| (e.id.clone(), 0.5)).collect();
        scores.insert("ghost".into(), 0.1);
        let bundle = EvalBundle { scores: Some(scores), flow_dir: None };
        assert!(evaluate(&m, Path::new("."), &bundle, &MetricConfig::default()).is_err());
    }

    #[test]
    fn partial_scores_omit_detection() {
        let m = manifest(1, 2);
        let scores = BTreeMap::from([("r0.real".to_string(), 0.1)]);
        let bundle = EvalBundle { scores: Some(scores), flow_dir: None };
        let report = evaluate(&m, Path::new("."), &bundle, &MetricConfig::default()).unwrap();
        assert!(report.detection.is_none() && report.localization.is_none());
        assert_eq!(report.entries[0].score, None);
    }
}
