//! Browser bindings: synthesize a warped face, undo it at any flow scale,
//! and inspect the forward-backward consistency mask.

use wasm_bindgen::prelude::*;
use warpforge::flow::{consistency_mask, warp_image};
use warpforge::metrics::{psnr, MetricConfig};
use warpforge::render::overlay;
use warpforge::synth::{procedural_face, synthesize_example, SynthConfig};
use warpforge::{ConsistencyConfig, FlowField, Image};

/// Largest canvas the demo will allocate.
pub const MAX_SIZE: usize = 512;

/// Flow scales of the PSNR curve: 0, 0.25, ..., 2.
pub const CURVE_SCALES: [f64; 9] = [0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0];

#[wasm_bindgen]
pub struct Demo {
    original: Image,
    warped: Image,
    flow: FlowField,
    backward: FlowField,
    max_displacement: f64,
    summary: String,
}

impl Demo {
    pub fn build(size: usize, seed: u64, max_displacement: f64) -> Result<Demo, String> {
        if !(16..=MAX_SIZE).contains(&size) {
            return Err(format!("size {size} must lie in 16..={MAX_SIZE}"));
        }
        let cfg = SynthConfig { max_displacement, ..Default::default() };
        cfg.validate().map_err(|e| e.to_string())?;
        let (original, mesh) = procedural_face(size, seed);
        let ex = synthesize_example(&original, &mesh, seed, &cfg).map_err(|e| e.to_string())?;
        let summary = ex
            .params
            .active()
            .map(|(p, v)| format!("{} {v:+.2}", p.name()))
            .collect::<Vec<_>>()
            .join(", ");
        Ok(Demo {
            original,
            warped: ex.warped,
            flow: ex.flow,
            backward: ex.backward.flow,
            max_displacement,
            summary,
        })
    }

    pub fn undone(&self, scale: f64) -> Result<Image, String> {
        warp_image(&self.warped, &self.flow.scaled(scale)).map_err(|e| e.to_string())
    }

    pub fn psnr_at(&self, scale: f64) -> Result<f64, String> {
        psnr(&self.original, &self.undone(scale)?, &MetricConfig::default()).map_err(|e| e.to_string())
    }

    /// Mask values; `drop_backward` pairs the forward flow with a zero
    /// backward flow, which no warp is consistent with.
    pub fn mask(&self, epsilon: f64, tau: f64, blur_sigma: f64, drop_backward: bool) -> Result<Image, String> {
        let cfg = ConsistencyConfig { epsilon, tau, blur_sigma };
        let zero;
        let back = if drop_backward {
            zero = FlowField::zeros(self.flow.height(), self.flow.width());
            &zero
        } else {
            &self.backward
        };
        let m = consistency_mask(&self.flow, back, &cfg).map_err(|e| e.to_string())?;
        Image::new(m.height(), m.width(), 1, m.values().to_vec()).map_err(|e| e.to_string())
    }
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(size: usize, seed: u32, max_displacement: f64) -> Result<Demo, JsError> {
        Demo::build(size, u64::from(seed), max_displacement).map_err(|e| JsError::new(&e))
    }

    pub fn size(&self) -> usize {
        self.original.width()
    }

    /// Active warp parameters, e.g. `mouth_height +0.41, jaw_width -0.20`.
    pub fn summary(&self) -> String {
        self.summary.clone()
    }

    pub fn max_flow(&self) -> f64 {
        self.flow.max_magnitude()
    }

    pub fn original_rgba(&self) -> Vec<u8> {
        self.original.to_rgba8()
    }

    pub fn warped_rgba(&self) -> Vec<u8> {
        self.warped.to_rgba8()
    }

    pub fn overlay_rgba(&self) -> Result<Vec<u8>, JsError> {
        let img = overlay(&self.original, &self.flow, self.max_displacement).map_err(|e| JsError::new(&e.to_string()))?;
        Ok(img.to_rgba8())
    }

    pub fn undo_rgba(&self, scale: f64) -> Result<Vec<u8>, JsError> {
        Ok(self.undone(scale).map_err(|e| JsError::new(&e))?.to_rgba8())
    }

    pub fn psnr(&self, scale: f64) -> Result<f64, JsError> {
        self.psnr_at(scale).map_err(|e| JsError::new(&e))
    }

    /// PSNR against the original at each of `CURVE_SCALES`.
    pub fn psnr_curve(&self) -> Result<Vec<f64>, JsError> {
        CURVE_SCALES.iter().map(|&k| self.psnr_at(k).map_err(|e| JsError::new(&e))).collect()
    }

    pub fn curve_scales(&self) -> Vec<f64> {
        CURVE_SCALES.to_vec()
    }

    pub fn mask_rgba(&self, epsilon: f64, tau: f64, blur_sigma: f64, drop_backward: bool) -> Result<Vec<u8>, JsError> {
        Ok(self.mask(epsilon, tau, blur_sigma, drop_backward).map_err(|e| JsError::new(&e))?.to_rgba8())
    }

    pub fn mask_mean(&self, epsilon: f64, tau: f64, blur_sigma: f64, drop_backward: bool) -> Result<f64, JsError> {
        let m = self.mask(epsilon, tau, blur_sigma, drop_backward).map_err(|e| JsError::new(&e))?;
        Ok(m.data().iter().sum::<f64>() / m.data().len() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean(img: &Image) -> f64 {
        img.data().iter().sum::<f64>() / img.data().len() as f64
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(Demo::build(8, 0, 5.0).is_err());
        assert!(Demo::build(MAX_SIZE + 1, 0, 5.0).is_err());
        assert!(Demo::build(64, 0, -1.0).is_err());
    }

    #[test]
    fn buffers_are_canvas_sized() {
        let d = Demo::build(64, 3, 5.0).unwrap();
        for buf in [d.original_rgba(), d.warped_rgba(), d.undone(1.0).unwrap().to_rgba8()] {
            assert_eq!(buf.len(), 64 * 64 * 4);
            assert!(buf.chunks(4).all(|p| p[3] == 255));
        }
        assert!(d.max_flow() > 0.0 && d.max_flow() <= 5.0);
        assert!(!d.summary().is_empty());
    }

    #[test]
    fn curve_peaks_at_true_flow() {
        let d = Demo::build(128, 1, 5.0).unwrap();
        let curve: Vec<f64> = CURVE_SCALES.iter().map(|&k| d.psnr_at(k).unwrap()).collect();
        let best = (0..curve.len()).max_by(|&a, &b| curve[a].total_cmp(&curve[b])).unwrap();
        assert_eq!(CURVE_SCALES[best], 1.0);
        assert!(curve[4] > curve[0]);
    }

    #[test]
    fn mask_reacts_to_dropped_backward_flow() {
        let d = Demo::build(96, 2, 5.0).unwrap();
        let kept = d.mask(0.1, 0.85, 7.0, false).unwrap();
        let dropped = d.mask(0.1, 0.85, 7.0, true).unwrap();
        assert!(mean(&kept) > 0.99);
        assert!(mean(&dropped) < mean(&kept));
        assert!(d.mask(0.1, 0.85, 0.0, false).is_err());
    }
}
