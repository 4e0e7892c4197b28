//! Helpers shared by the pipeline and acceptance tests.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use warpforge::io::{read_flo, write_flo};
use warpforge::metrics::Label;
use warpforge::FlowField;
use warpforge_cli::{generate_dataset, write_face_corpus, DatasetManifest, EvalBundle, GenerateOptions};

pub fn corpus(dir: &Path, count: usize, size: usize) -> PathBuf {
    let images = dir.join("corpus");
    write_face_corpus(&images, count, size, 11).unwrap();
    images
}

pub fn generate(images: &Path, out: &Path, reps: u32, seed: u64, workers: usize) -> DatasetManifest {
    let opts = GenerateOptions {
        reps,
        workers: Some(workers),
        ..Default::default()
    };
    generate_dataset(images, &images.join("landmarks.json"), out, &opts, seed)
        .unwrap()
        .manifest
}

#[derive(Clone, Copy, Debug)]
pub enum Bundle {
    /// Ground-truth flows, score equal to the label.
    Oracle,
    /// Zero flows, score 0.5 everywhere.
    Zero,
    /// Oracle scores randomly permuted across entries; no flows.
    Shuffled(u64),
}

fn write_scores(path: &Path, scores: &BTreeMap<String, f64>) {
    let mut text = String::from("id,score\n");
    for (id, s) in scores {
        text.push_str(&format!("{id},{s}\n"));
    }
    fs::write(path, text).unwrap();
}

/// Writes the bundle's CSV and flow files under `dir` and loads it back the
/// way the CLI does.
pub fn write_bundle(root: &Path, manifest: &DatasetManifest, kind: Bundle, dir: &Path) -> EvalBundle {
    fs::create_dir_all(dir.join("flows")).unwrap();
    let label_score = |l: Label| if l == Label::Fake { 1.0 } else { 0.0 };
    let mut scores: BTreeMap<String, f64> = manifest
        .entries
        .iter()
        .map(|e| {
            let s = match kind {
                Bundle::Zero => 0.5,
                _ => label_score(e.label),
            };
            (e.id.clone(), s)
        })
        .collect();
    if let Bundle::Shuffled(seed) = kind {
        let mut values: Vec<f64> = scores.values().copied().collect();
        values.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        for (v, s) in scores.values_mut().zip(values) {
            *v = s;
        }
    }
    let csv = dir.join("scores.csv");
    write_scores(&csv, &scores);
    let with_flows = !matches!(kind, Bundle::Shuffled(_));
    if with_flows {
        for e in manifest.entries.iter().filter(|e| e.label == Label::Fake) {
            let gt = read_flo(root.join(e.flow_path.as_ref().unwrap())).unwrap();
            let pred = match kind {
                Bundle::Zero => FlowField::zeros(gt.height(), gt.width()),
                _ => gt,
            };
            write_flo(dir.join("flows").join(format!("{}.flo", e.id)), &pred).unwrap();
        }
    }
    EvalBundle {
        scores: Some(EvalBundle::load_scores(&csv, manifest).unwrap()),
        flow_dir: with_flows.then(|| dir.join("flows")),
    }
}

/// Relative path to file bytes for every file under `dir`.
pub fn tree_bytes(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    out
}
