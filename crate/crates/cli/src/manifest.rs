//! JSONL dataset manifests.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use warpforge::augment::AugmentSpec;
use warpforge::metrics::Label;
use warpforge::synth::FalParams;

pub const MANIFEST_NAME: &str = "manifest.jsonl";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

/// Fractions of images assigned to train and val; the rest go to test.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitFractions {
    pub train: f64,
    pub val: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self { train: 0.8, val: 0.1 }
    }
}

impl SplitFractions {
    pub fn validate(&self) -> Result<()> {
        if !(self.train >= 0.0 && self.val >= 0.0 && self.train + self.val <= 1.0) {
            bail!("split fractions {} + {} must be non-negative and sum to at most 1", self.train, self.val);
        }
        Ok(())
    }

    /// Split of an image id. Depends only on the id, so assignments stay
    /// put as the corpus grows, and every derivative of an image shares its
    /// original's split.
    pub fn assign(&self, image_id: &str) -> Split {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in image_id.bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        // FNV alone leaves the high bits poorly mixed for similar ids
        h = (h ^ (h >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        h = (h ^ (h >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        h ^= h >> 31;
        // top 53 bits as a uniform fraction
        let u = (h >> 11) as f64 / (1u64 << 53) as f64;
        if u < self.train {
            Split::Train
        } else if u < self.train + self.val {
            Split::Val
        } else {
            Split::Test
        }
    }
}

/// One manifest line. Paths are relative to the manifest's directory.
///
/// Real entries carry only `original_path`; fakes add the warped image, the
/// ground-truth original-to-modified flow, its consistency mask, the
/// parameters and the seed they were drawn from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub id: String,
    pub image_id: String,
    pub label: Label,
    pub split: Split,
    pub original_path: PathBuf,
    pub warped_path: Option<PathBuf>,
    pub flow_path: Option<PathBuf>,
    pub mask_path: Option<PathBuf>,
    pub params: Option<FalParams>,
    pub seed: Option<u64>,
    pub augment_spec: Option<AugmentSpec>,
}

impl ManifestEntry {
    /// The image a detector scores for this entry.
    pub fn scored_path(&self) -> &Path {
        self.warped_path.as_deref().unwrap_or(&self.original_path)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn new(mut entries: Vec<ManifestEntry>) -> Result<Self> {
        entries.sort_by(|a, b| a.id.cmp(&b.id));
        let m = Self { entries };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for e in &self.entries {
            if !seen.insert(e.id.as_str()) {
                bail!("duplicate manifest id {:?}", e.id);
            }
            if e.label == Label::Fake && (e.warped_path.is_none() || e.flow_path.is_none()) {
                bail!("fake entry {:?} lacks a warped image or flow", e.id);
            }
        }
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&ManifestEntry> {
        self.entries
            .binary_search_by(|e| e.id.as_str().cmp(id))
            .ok()
            .map(|i| &self.entries[i])
    }

    pub fn count(&self, label: Label) -> usize {
        self.entries.iter().filter(|e| e.label == label).count()
    }

    /// The real entry for an image id.
    pub fn original_of(&self, image_id: &str) -> Option<&ManifestEntry> {
        self.entries
            .iter()
            .find(|e| e.label == Label::Real && e.image_id == image_id)
    }

    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            entries.push(
                serde_json::from_str(line).with_context(|| format!("manifest line {}", n + 1))?,
            );
        }
        Self::new(entries)
    }
}

pub fn write_manifest(path: impl AsRef<Path>, manifest: &DatasetManifest) -> Result<()> {
    let path = path.as_ref();
    let mut f = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    f.write_all(manifest.to_jsonl()?.as_bytes())?;
    f.flush()?;
    Ok(())
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut text = String::new();
    for line in BufReader::new(f).lines() {
        text.push_str(&line?);
        text.push('\n');
    }
    DatasetManifest::from_jsonl(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real(id: &str) -> ManifestEntry {
        ManifestEntry {
            id: id.into(),
            image_id: id.into(),
            label: Label::Real,
            split: Split::Train,
            original_path: format!("originals/{id}.png").into(),
            warped_path: None,
            flow_path: None,
            mask_path: None,
            params: None,
            seed: None,
            augment_spec: None,
        }
    }

    #[test]
    fn jsonl_round_trip_sorted() {
        let m = DatasetManifest::new(vec![real("b"), real("a")]).unwrap();
        assert_eq!(m.entries[0].id, "a");
        let text = m.to_jsonl().unwrap();
        assert_eq!(text.lines().count(), 2);
        assert_eq!(DatasetManifest::from_jsonl(&text).unwrap(), m);
        assert!(m.get("b").is_some() && m.get("c").is_none());
    }

    #[test]
    fn duplicate_ids_rejected() {
        assert!(DatasetManifest::new(vec![real("a"), real("a")]).is_err());
    }

    #[test]
    fn fake_without_flow_rejected() {
        let mut e = real("a");
        e.label = Label::Fake;
        assert!(DatasetManifest::new(vec![e]).is_err());
    }

    #[test]
    fn split_is_stable_and_roughly_proportional() {
        let f = SplitFractions::default();
        assert_eq!(f.assign("face_0001"), f.assign("face_0001"));
        let n = 10_000;
        let train = (0..n).filter(|i| f.assign(&format!("img{i}")) == Split::Train).count();
        assert!((train as f64 / n as f64 - 0.8).abs() < 0.03, "{train}");
        let all_test = SplitFractions { train: 0.0, val: 0.0 };
        assert_eq!(all_test.assign("x"), Split::Test);
        assert!(SplitFractions { train: 0.9, val: 0.2 }.validate().is_err());
    }
}
