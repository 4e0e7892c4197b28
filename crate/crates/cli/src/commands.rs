//! Command-line surface.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use warpforge::augment::{apply_augment, jpeg_cycle, AugmentSpec};
use warpforge::flow::{consistency_mask, gaussian_blur};
use warpforge::io::{load_image, read_flo, read_msk, save_png, write_msk};
use warpforge::losses::{total_loss, LossConfig};
use warpforge::metrics::MetricConfig;
use warpforge::synth::{derive_seed, SynthConfig};
use warpforge::{ConsistencyConfig, ConsistencyMask, Image};

use crate::evaluate::{evaluate, EvalBundle};
use crate::generate::{discover_images, generate_dataset, with_workers, write_face_corpus, GenerateOptions};
use crate::manifest::{read_manifest, SplitFractions};
use crate::render::{render_overlay, render_undo};

#[derive(Debug, Parser)]
#[command(name = "warpforge", version, about = "Facial-warp synthesis, flow tools and forensic evaluation")]
pub struct Cli {
    /// JSON file with optional `synth`, `consistency`, `metrics` and `loss`
    /// sections; command-line flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads (default: all logical cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a corpus of procedural faces with landmarks.
    Faces(FacesArgs),
    /// Generate a manipulated dataset from images and landmarks.
    Synth(SynthArgs),
    /// Consistency mask from a forward/backward flow pair.
    Mask(MaskArgs),
    /// Undo a warp: resample an image with an original-to-modified flow.
    Unwarp(UnwarpArgs),
    /// Render flow magnitude over an image.
    Overlay(OverlayArgs),
    /// Evaluate the training losses for a predicted flow.
    Loss(LossArgs),
    /// Score predictions against a dataset manifest.
    Eval(EvalArgs),
    /// Apply an augmentation spec to every image in a directory.
    Augment(AugmentArgs),
    /// JPEG and blur robustness sweeps over a directory.
    Corrupt(CorruptArgs),
}

#[derive(Debug, Args)]
pub struct FacesArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 20)]
    pub count: usize,
    #[arg(long, default_value_t = 256)]
    pub size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub images: PathBuf,
    /// Landmark JSON; defaults to `<images>/landmarks.json`.
    #[arg(long)]
    pub landmarks: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 6)]
    pub reps: u32,
    #[arg(long)]
    pub max_disp: Option<f64>,
    #[arg(long, default_value_t = 0.8)]
    pub train: f64,
    #[arg(long, default_value_t = 0.1)]
    pub val: f64,
    /// Apply photometric jitter and JPEG to saved images.
    #[arg(long)]
    pub augment: bool,
    /// Print throughput after generating.
    #[arg(long)]
    pub bench: bool,
}

#[derive(Debug, Args)]
pub struct MaskArgs {
    /// Original-to-modified flow.
    #[arg(long)]
    pub forward: PathBuf,
    /// Modified-to-original flow.
    #[arg(long)]
    pub backward: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Also write the mask as a grayscale PNG.
    #[arg(long)]
    pub png: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct UnwarpArgs {
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long)]
    pub flow: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct OverlayArgs {
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long)]
    pub flow: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Magnitude, in pixels, rendered at full heat.
    #[arg(long)]
    pub max_disp: Option<f64>,
}

#[derive(Debug, Args)]
pub struct LossArgs {
    #[arg(long)]
    pub modified: PathBuf,
    #[arg(long)]
    pub original: PathBuf,
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub gt: PathBuf,
    /// MSK1 mask; all ones when omitted.
    #[arg(long)]
    pub mask: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub strides: Option<Vec<usize>>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// CSV with columns `id,score` (optional `label`).
    #[arg(long)]
    pub scores: Option<PathBuf>,
    /// Directory of predicted `<id>.flo` files.
    #[arg(long)]
    pub flows: Option<PathBuf>,
    /// Report path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub iou_tau: Option<f64>,
    #[arg(long)]
    pub acc_threshold: Option<f64>,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    /// AugmentSpec JSON. Each image uses the spec's seed mixed with its id.
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CorruptArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "30,50,70,90")]
    pub jpeg: Vec<u8>,
    /// Gaussian blur sigmas in pixels.
    #[arg(long, value_delimiter = ',', default_value = "1,2,4")]
    pub blur: Vec<f64>,
}

/// Contents of a `--config` file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub synth: SynthConfig,
    pub consistency: ConsistencyConfig,
    pub metrics: MetricConfig,
    pub loss: LossConfig,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => {
                let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))
            }
            None => Ok(Self::default()),
        }
    }
}

fn write_json(value: &impl Serialize, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(p) => fs::write(p, text + "\n")?,
        None => println!("{text}"),
    }
    Ok(())
}

fn mask_png(mask: &ConsistencyMask) -> Result<Image> {
    Ok(Image::new(mask.height(), mask.width(), 1, mask.values().to_vec())?)
}

pub fn run(cli: Cli) -> Result<()> {
    let cfg = FileConfig::load(cli.config.as_deref())?;
    let workers = cli.workers;
    match cli.command {
        Command::Faces(a) => {
            let path = with_workers(workers, || write_face_corpus(&a.out, a.count, a.size, a.seed))??;
            info!("wrote {} faces and {}", a.count, path.display());
        }
        Command::Synth(a) => {
            let mut synth = cfg.synth.clone();
            if let Some(d) = a.max_disp {
                synth.max_displacement = d;
            }
            let opts = GenerateOptions {
                synth,
                consistency: cfg.consistency,
                reps: a.reps,
                splits: SplitFractions { train: a.train, val: a.val },
                augment: a.augment,
                workers,
            };
            let landmarks = a.landmarks.clone().unwrap_or_else(|| a.images.join("landmarks.json"));
            let summary = generate_dataset(&a.images, &landmarks, &a.out, &opts, a.seed)?;
            info!(
                "{} entries ({} skipped images) in {:.2?}",
                summary.manifest.entries.len(),
                summary.skipped.len(),
                summary.elapsed
            );
            if a.bench {
                let threads = with_workers(workers, rayon::current_num_threads)?;
                println!(
                    "synthesized {} triples in {:.3} s on {threads} threads: {:.1} triples/s",
                    summary.manifest.count(warpforge::metrics::Label::Fake),
                    summary.elapsed.as_secs_f64(),
                    summary.triples_per_second()
                );
            }
        }
        Command::Mask(a) => {
            let mut c = cfg.consistency;
            c.epsilon = a.eps.unwrap_or(c.epsilon);
            c.tau = a.tau.unwrap_or(c.tau);
            c.blur_sigma = a.sigma.unwrap_or(c.blur_sigma);
            let mask = consistency_mask(&read_flo(&a.forward)?, &read_flo(&a.backward)?, &c)?;
            write_msk(&a.out, &mask)?;
            if let Some(p) = &a.png {
                save_png(&mask_png(&mask)?, p)?;
            }
            info!("mean mask {:.4}", mask.mean());
        }
        Command::Unwarp(a) => {
            render_undo(&load_image(&a.image)?, &read_flo(&a.flow)?, &a.out)?;
        }
        Command::Overlay(a) => {
            let scale = a.max_disp.unwrap_or(cfg.synth.max_displacement);
            render_overlay(&load_image(&a.image)?, &read_flo(&a.flow)?, scale, &a.out)?;
        }
        Command::Loss(a) => {
            let mut lc = cfg.loss.clone();
            if let Some(s) = a.strides {
                lc.strides = s;
            }
            let pred = read_flo(&a.pred)?;
            let mask = match &a.mask {
                Some(p) => read_msk(p)?,
                None => ConsistencyMask::ones(pred.height(), pred.width()),
            };
            let t = total_loss(
                &load_image(&a.modified)?,
                &pred,
                &read_flo(&a.gt)?,
                &mask,
                &load_image(&a.original)?,
                &lc,
            )?;
            #[derive(Serialize)]
            struct Out {
                epe: f64,
                multiscale: f64,
                reconstruction: f64,
                total: f64,
            }
            write_json(
                &Out {
                    epe: t.epe.value,
                    multiscale: t.multiscale.value,
                    reconstruction: t.reconstruction.value,
                    total: t.total.value,
                },
                None,
            )?;
        }
        Command::Eval(a) => {
            let mut mc = cfg.metrics.clone();
            mc.iou_threshold = a.iou_tau.unwrap_or(mc.iou_threshold);
            mc.accuracy_threshold = a.acc_threshold.unwrap_or(mc.accuracy_threshold);
            let manifest = read_manifest(&a.manifest)?;
            let root = a.manifest.parent().unwrap_or(Path::new("."));
            let bundle = EvalBundle {
                scores: a.scores.as_deref().map(|p| EvalBundle::load_scores(p, &manifest)).transpose()?,
                flow_dir: a.flows.clone(),
            };
            let report = with_workers(workers, || evaluate(&manifest, root, &bundle, &mc))??;
            write_json(&report, a.out.as_deref())?;
        }
        Command::Augment(a) => {
            let spec: AugmentSpec = serde_json::from_str(&fs::read_to_string(&a.spec)?)
                .with_context(|| format!("parsing {}", a.spec.display()))?;
            spec.validate()?;
            fs::create_dir_all(&a.out)?;
            let images: Vec<_> = discover_images(&a.input)?.into_iter().collect();
            with_workers(workers, || {
                images.par_iter().try_for_each(|(id, path)| -> Result<()> {
                    let s = AugmentSpec {
                        seed: derive_seed(spec.seed, id, 0),
                        ..spec.clone()
                    };
                    save_png(&apply_augment(&load_image(path)?, &s)?, a.out.join(format!("{id}.png")))?;
                    Ok(())
                })
            })??;
        }
        Command::Corrupt(a) => {
            for q in &a.jpeg {
                if !(1..=100).contains(q) {
                    bail!("JPEG quality {q} must be in 1..=100");
                }
            }
            let images: Vec<_> = discover_images(&a.input)?.into_iter().collect();
            let mut levels: Vec<String> = a.jpeg.iter().map(|q| format!("jpeg_q{q}")).collect();
            levels.extend(a.blur.iter().map(|s| format!("blur_s{s}")));
            for l in &levels {
                fs::create_dir_all(a.out.join(l))?;
            }
            with_workers(workers, || {
                images.par_iter().try_for_each(|(id, path)| -> Result<()> {
                    let img = load_image(path)?;
                    for q in &a.jpeg {
                        save_png(&jpeg_cycle(&img, *q)?, a.out.join(format!("jpeg_q{q}")).join(format!("{id}.png")))?;
                    }
                    for s in &a.blur {
                        let planes = img
                            .planes()
                            .iter()
                            .map(|p| gaussian_blur(p, *s))
                            .collect::<warpforge::Result<Vec<_>>>()?;
                        save_png(&Image::from_planes(&planes)?, a.out.join(format!("blur_s{s}")).join(format!("{id}.png")))?;
                    }
                    Ok(())
                })
            })??;
        }
    }
    Ok(())
}
