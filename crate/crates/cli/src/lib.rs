//! Dataset generation, evaluation and rendering on top of `warpforge`.
//!
//! The binary in `main.rs` is a thin wrapper over [`commands::run`]; the
//! pipeline pieces are usable directly from tests and other tools.

pub mod commands;
pub mod evaluate;
pub mod generate;
pub mod manifest;
pub mod render;

pub use evaluate::{balanced_iteration_weights, evaluate, EvalBundle, EvalReport};
pub use generate::{generate_dataset, write_face_corpus, GenerateOptions, GenerateSummary};
pub use manifest::{read_manifest, write_manifest, DatasetManifest, ManifestEntry, Split, SplitFractions};
pub use render::{render_overlay, render_undo};
