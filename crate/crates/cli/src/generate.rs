//! Dataset generation.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use log::{info, warn};
use rayon::prelude::*;
use warpforge::augment::{apply_augment, AugmentSpec};
use warpforge::flow::consistency_mask;
use warpforge::io::{load_image, read_landmarks, save_png, write_flo, write_msk, LandmarkRecord};
use warpforge::metrics::Label;
use warpforge::synth::{derive_seed, procedural_face, synthesize_example, SynthConfig};
use warpforge::{ConsistencyConfig, Image};

use crate::manifest::{write_manifest, DatasetManifest, ManifestEntry, SplitFractions, MANIFEST_NAME};

#[derive(Clone, Debug)]
pub struct GenerateOptions {
    pub synth: SynthConfig,
    pub consistency: ConsistencyConfig,
    pub reps: u32,
    pub splits: SplitFractions,
    /// Apply the default robustness augmentation (photometric jitter and
    /// JPEG) to every saved image.
    pub augment: bool,
    /// Worker threads; `None` uses every logical core.
    pub workers: Option<usize>,
}

impl Default for GenerateOptions {
    fn default() -> Self {
        Self {
            synth: SynthConfig::default(),
            consistency: ConsistencyConfig::default(),
            reps: 6,
            splits: SplitFractions::default(),
            augment: false,
            workers: None,
        }
    }
}

/// What a generation run produced.
#[derive(Clone, Debug)]
pub struct GenerateSummary {
    pub manifest: DatasetManifest,
    pub skipped: Vec<String>,
    pub elapsed: Duration,
}

impl GenerateSummary {
    pub fn triples_per_second(&self) -> f64 {
        self.manifest.count(Label::Fake) as f64 / self.elapsed.as_secs_f64().max(1e-9)
    }
}

fn is_image(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "jpg" | "jpeg"))
        .unwrap_or(false)
}

/// Image files in `dir` keyed by file stem, which becomes the image id.
pub fn discover_images(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
        let path = entry?.path();
        if !path.is_file() || !is_image(&path) {
            continue;
        }
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .with_context(|| format!("non-UTF-8 file name {}", path.display()))?
            .to_string();
        if let Some(prev) = out.insert(stem.clone(), path.clone()) {
            bail!("image id {stem:?} is ambiguous: {} and {}", prev.display(), path.display());
        }
    }
    Ok(out)
}

/// Landmark records keyed by the file name of their `image` field.
fn index_landmarks(records: Vec<LandmarkRecord>) -> BTreeMap<String, LandmarkRecord> {
    records
        .into_iter()
        .filter_map(|r| {
            let name = r.image.file_name()?.to_str()?.to_string();
            Some((name, r))
        })
        .collect()
}

fn rel(dir: &str, name: String) -> PathBuf {
    Path::new(dir).join(name)
}

struct Job<'a> {
    image_id: &'a str,
    path: &'a Path,
    landmarks: &'a LandmarkRecord,
}

fn process(job: &Job<'_>, out_dir: &Path, opts: &GenerateOptions, global_seed: u64) -> Result<Vec<ManifestEntry>> {
    let id = job.image_id;
    let img = load_image(job.path).with_context(|| format!("loading {}", job.path.display()))?;
    let mesh = job.landmarks.to_mesh(img.height(), img.width())
        .with_context(|| format!("landmarks for {id}"))?;
    let split = opts.splits.assign(id);
    let finish = |img: &Image, seed: u64| -> Result<(Image, Option<AugmentSpec>)> {
        if opts.augment {
            let spec = AugmentSpec::robustness(seed);
            Ok((apply_augment(img, &spec)?, Some(spec)))
        } else {
            Ok((img.clone(), None))
        }
    };

    let original_path = rel("originals", format!("{id}.png"));
    let (saved, spec) = finish(&img, derive_seed(global_seed, id, u32::MAX))?;
    save_png(&saved, out_dir.join(&original_path))?;
    let mut entries = vec![ManifestEntry {
        id: format!("{id}.real"),
        image_id: id.to_string(),
        label: Label::Real,
        split,
        original_path: original_path.clone(),
        warped_path: None,
        flow_path: None,
        mask_path: None,
        params: None,
        seed: None,
        augment_spec: spec,
    }];
    for rep in 0..opts.reps {
        let seed = derive_seed(global_seed, id, rep);
        let ex = synthesize_example(&img, &mesh, seed, &opts.synth)?;
        let mask = consistency_mask(&ex.flow, &ex.backward.flow, &opts.consistency)?;
        let name = format!("{id}.fake{rep}");
        let warped_path = rel("warped", format!("{name}.png"));
        let flow_path = rel("flows", format!("{name}.flo"));
        let mask_path = rel("masks", format!("{name}.msk"));
        let (warped, spec) = finish(&ex.warped, seed)?;
        save_png(&warped, out_dir.join(&warped_path))?;
        write_flo(out_dir.join(&flow_path), &ex.flow)?;
        write_msk(out_dir.join(&mask_path), &mask)?;
        entries.push(ManifestEntry {
            id: name,
            image_id: id.to_string(),
            label: Label::Fake,
            split,
            original_path: original_path.clone(),
            warped_path: Some(warped_path),
            flow_path: Some(flow_path),
            mask_path: Some(mask_path),
            params: Some(ex.params),
            seed: Some(seed),
            augment_spec: spec,
        });
    }
    Ok(entries)
}

/// Runs `f` on a pool with the requested worker count.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        if n == 0 {
            bail!("--workers must be at least 1");
        }
        builder = builder.num_threads(n);
    }
    Ok(builder.build()?.install(f))
}

/// Synthesizes `reps` manipulations of every image in `image_dir` that has
/// landmarks, writing images, flows, masks and `manifest.jsonl` under
/// `out_dir`.
///
/// Images are processed independently with per-image derived seeds and the
/// manifest is sorted by id, so the output does not depend on the worker
/// count.
pub fn generate_dataset(
    image_dir: &Path,
    landmarks_file: &Path,
    out_dir: &Path,
    opts: &GenerateOptions,
    seed: u64,
) -> Result<GenerateSummary> {
    opts.synth.validate()?;
    opts.consistency.validate()?;
    opts.splits.validate()?;
    let start = Instant::now();
    let images = discover_images(image_dir)?;
    let mut landmarks = index_landmarks(read_landmarks(landmarks_file)?);
    for sub in ["originals", "warped", "flows", "masks"] {
        fs::create_dir_all(out_dir.join(sub))?;
    }

    let mut jobs = Vec::new();
    let mut skipped = Vec::new();
    let names: BTreeMap<String, &String> = images
        .iter()
        .filter_map(|(id, p)| Some((p.file_name()?.to_str()?.to_string(), id)))
        .collect();
    let mut matched = BTreeMap::new();
    for (name, id) in &names {
        match landmarks.remove(name) {
            Some(rec) => {
                matched.insert((*id).clone(), rec);
            }
            None => {
                warn!("no landmarks for {name}; skipping");
                skipped.push((*id).clone());
            }
        }
    }
    for name in landmarks.keys() {
        warn!("landmarks for {name} match no image");
    }
    for (id, rec) in &matched {
        jobs.push(Job {
            image_id: id,
            path: &images[id],
            landmarks: rec,
        });
    }
    info!("generating {} x {} manipulations", jobs.len(), opts.reps);

    let results: Vec<Result<Vec<ManifestEntry>>> = with_workers(opts.workers, || {
        jobs.par_iter().map(|job| process(job, out_dir, opts, seed)).collect()
    })?;
    let mut entries = Vec::new();
    for r in results {
        entries.extend(r?);
    }
    let manifest = DatasetManifest::new(entries)?;
    write_manifest(out_dir.join(MANIFEST_NAME), &manifest)?;
    Ok(GenerateSummary {
        manifest,
        skipped,
        elapsed: start.elapsed(),
    })
}

/// Writes `count` procedural faces and a `landmarks.json` describing them.
pub fn write_face_corpus(out_dir: &Path, count: usize, size: usize, seed: u64) -> Result<PathBuf> {
    fs::create_dir_all(out_dir)?;
    let records: Vec<Result<LandmarkRecord>> = (0..count)
        .into_par_iter()
        .map(|i| {
            let name = format!("face_{i:04}.png");
            let (img, mesh) = procedural_face(size, derive_seed(seed, "face", i as u32));
            save_png(&img, out_dir.join(&name))?;
            Ok(LandmarkRecord::from_mesh(name, &mesh))
        })
        .collect();
    let records = records.into_iter().collect::<Result<Vec<_>>>()?;
    let path = out_dir.join("landmarks.json");
    warpforge::io::write_landmarks(&path, &records)?;
    Ok(path)
}
