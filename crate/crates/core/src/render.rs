//! Visualizations: flow-magnitude overlays and "undo" renders.
//!
//! Overlay normalization is fixed: a magnitude of `max_displacement` pixels
//! or more maps to full heat, zero maps to none. The colour map runs
//! transparent-black through red and orange to yellow, and the heat colour
//! is alpha-blended with alpha equal to the normalized magnitude over a
//! grayscale copy of the image.

use crate::error::{check_dims, Error, Result};
use crate::flow::{flow_magnitude, warp_image, FlowField};
use crate::raster::{Image, ScalarField};

/// Normalized magnitude `min(|U| / max_displacement, 1)`.
pub fn overlay_weights(flow: &FlowField, max_displacement: f64) -> Result<ScalarField> {
    if !(max_displacement > 0.0) || !max_displacement.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "overlay scale {max_displacement} must be positive"
        )));
    }
    let mag = flow_magnitude(flow);
    let data = mag.data().iter().map(|m| (m / max_displacement).min(1.0)).collect();
    Ok(ScalarField::from_raw(flow.height(), flow.width(), data))
}

/// Heat colour for `t` in `[0, 1]`: red at the low end, yellow at the top.
pub fn heat_color(t: f64) -> [f64; 3] {
    let t = t.clamp(0.0, 1.0);
    [1.0, t, 0.15 * t]
}

/// Heat-coloured flow magnitude over a desaturated copy of `img`.
pub fn overlay(img: &Image, flow: &FlowField, max_displacement: f64) -> Result<Image> {
    check_dims(img.dims(), flow.dims())?;
    let weights = overlay_weights(flow, max_displacement)?;
    let gray = img.to_gray();
    let mut data = Vec::with_capacity(img.height() * img.width() * 3);
    for (&g, &a) in gray.data().iter().zip(weights.data()) {
        let heat = heat_color(a);
        data.extend(heat.iter().map(|h| g * (1.0 - a) + h * a));
    }
    Image::from_unclamped(img.height(), img.width(), 3, data)
}

/// Resamples the modified image with an original-to-modified flow,
/// approximating the original.
pub fn undo(modified: &Image, flow: &FlowField) -> Result<Image> {
    warp_image(modified, flow)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{procedural_face, synthesize_with_params, FalParam, FalParams, LandmarkGroup, SynthConfig};

    #[test]
    fn zero_flow_gives_plain_desaturated_copy() {
        let (img, _) = procedural_face(64, 0);
        let out = overlay(&img, &FlowField::zeros(64, 64), 5.0).unwrap();
        assert_eq!(out.dims(), img.dims());
        let gray = img.to_gray();
        for r in 0..64 {
            for c in 0..64 {
                let p = out.pixel(r, c);
                assert_eq!(p, &[gray.get(r, c, 0); 3]);
            }
        }
    }

    #[test]
    fn full_magnitude_is_pure_heat() {
        let img = Image::filled(4, 4, 3, 0.3).unwrap();
        let out = overlay(&img, &FlowField::constant(4, 4, 6.0, 8.0), 5.0).unwrap();
        assert_eq!(out.pixel(1, 1), &heat_color(1.0));
        assert!(overlay(&img, &FlowField::zeros(4, 5), 5.0).is_err());
        assert!(overlay(&img, &FlowField::zeros(4, 4), 0.0).is_err());
    }

    #[test]
    fn mouth_warp_peaks_inside_mouth_box() {
        let cfg = SynthConfig::default();
        for seed in 0..4 {
            let (img, mesh) = procedural_face(128, seed);
            let params = FalParams::single(FalParam::MouthHeight, 1.0).unwrap();
            let ex = synthesize_with_params(&img, &mesh, params, &cfg).unwrap();
            let (row, col) = overlay_weights(&ex.flow, cfg.max_displacement).unwrap().argmax();
            let (x0, y0, x1, y1) = mesh.bounding_box(LandmarkGroup::Mouth).unwrap();
            let (x, y) = (col as f64, row as f64);
            assert!(x >= x0 && x <= x1 && y >= y0 && y <= y1, "peak ({x}, {y}) outside mouth box");
        }
    }

    #[test]
    fn undo_with_zero_flow_is_copy() {
        let (img, _) = procedural_face(32, 1);
        assert_eq!(undo(&img, &FlowField::zeros(32, 32)).unwrap(), img);
    }
}
