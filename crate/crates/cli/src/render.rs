//! Visualizations written to disk.

use std::path::Path;

use anyhow::Result;
use warpforge::io::save_png;
use warpforge::render::{overlay, undo};
use warpforge::{FlowField, Image};

/// The 8-bit image a PNG of `img` holds.
fn quantized(img: &Image) -> Result<Image> {
    Ok(Image::from_u8(img.height(), img.width(), img.channels(), &img.to_u8())?)
}

/// Writes the flow-magnitude overlay as PNG. Magnitudes are normalized to
/// `0..max_displacement` so renders are comparable across images.
pub fn render_overlay(img: &Image, flow: &FlowField, max_displacement: f64, out_path: &Path) -> Result<Image> {
    let out = quantized(&overlay(img, flow, max_displacement)?)?;
    save_png(&out, out_path)?;
    Ok(out)
}

/// Writes `warp_image(modified, flow)` as PNG and returns what was written.
pub fn render_undo(modified: &Image, flow: &FlowField, out_path: &Path) -> Result<Image> {
    let out = quantized(&undo(modified, flow)?)?;
    save_png(&out, out_path)?;
    Ok(out)
}
