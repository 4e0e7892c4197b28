//! Robustness augmentations: flip, crop, resize, photometric jitter, JPEG.
//!
//! [`apply_augment`] runs the stages in a fixed order
//! (flip, crop, resize, photometric, JPEG) so a spec plus seed always
//! reproduces the same output.

use image::codecs::jpeg::JpegEncoder;
use image::imageops::{self, FilterType};
use image::{ExtendedColorType, ImageBuffer, ImageFormat, Luma, Rgb};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{luma, Image};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResizeMethod {
    #[default]
    Bilinear,
    Bicubic,
}

/// One augmentation recipe. Fields left at `None`/`0`/`false` are skipped.
///
/// The photometric fields are jitter amplitudes: `brightness = 0.2` draws a
/// multiplier uniformly from `[0.8, 1.2]`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentSpec {
    pub jpeg_quality: Option<u8>,
    pub resize_factor: Option<f64>,
    pub resize_method: ResizeMethod,
    pub brightness: f64,
    pub contrast: f64,
    pub saturation: f64,
    pub flip: bool,
    pub crop_size: Option<usize>,
    pub seed: u64,
}

impl AugmentSpec {
    /// The default robustness set: photometric jitter of +-20% and JPEG at
    /// a seed-drawn quality in `[30, 100]`.
    pub fn robustness(seed: u64) -> Self {
        let quality = ChaCha8Rng::seed_from_u64(seed ^ 0x4a50_4547).random_range(30..=100);
        Self {
            jpeg_quality: Some(quality),
            brightness: 0.2,
            contrast: 0.2,
            saturation: 0.2,
            seed,
            ..Default::default()
        }
    }

    /// True when the spec changes the pixel grid (flip, crop or resize).
    pub fn is_geometric(&self) -> bool {
        self.flip || self.crop_size.is_some() || self.resize_factor.is_some()
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(q) = self.jpeg_quality {
            check_quality(q)?;
        }
        if let Some(f) = self.resize_factor {
            if !(f > 0.0) || !f.is_finite() {
                return Err(Error::InvalidParameter(format!("resize factor {f} must be > 0")));
            }
        }
        for (name, v) in [
            ("brightness", self.brightness),
            ("contrast", self.contrast),
            ("saturation", self.saturation),
        ] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::InvalidParameter(format!("{name} jitter {v} must be in [0, 1)")));
            }
        }
        if self.crop_size == Some(0) {
            return Err(Error::InvalidParameter("crop size must be positive".into()));
        }
        Ok(())
    }
}

fn check_quality(q: u8) -> Result<()> {
    if !(1..=100).contains(&q) {
        return Err(Error::InvalidParameter(format!("JPEG quality {q} must be in 1..=100")));
    }
    Ok(())
}

pub fn apply_augment(img: &Image, spec: &AugmentSpec) -> Result<Image> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = if spec.flip { img.flip_horizontal() } else { img.clone() };
    if let Some(size) = spec.crop_size {
        if size > out.height() || size > out.width() {
            return Err(Error::InvalidParameter(format!(
                "crop {size} larger than {}x{} image",
                out.height(),
                out.width()
            )));
        }
        let top = rng.random_range(0..=out.height() - size);
        let left = rng.random_range(0..=out.width() - size);
        out = out.crop(top, left, size, size)?;
    }
    if let Some(f) = spec.resize_factor {
        let h = ((out.height() as f64 * f).round() as usize).max(1);
        let w = ((out.width() as f64 * f).round() as usize).max(1);
        out = resize(&out, h, w, spec.resize_method)?;
    }
    let mut jitter = |amp: f64| if amp > 0.0 { rng.random_range(1.0 - amp..=1.0 + amp) } else { 1.0 };
    let (b, c, s) = (jitter(spec.brightness), jitter(spec.contrast), jitter(spec.saturation));
    if b != 1.0 || c != 1.0 || s != 1.0 {
        out = photometric(&out, b, c, s)?;
    }
    if let Some(q) = spec.jpeg_quality {
        out = jpeg_cycle(&out, q)?;
    }
    Ok(out)
}

/// Brightness multiply, contrast about the global mean, then saturation
/// towards per-pixel luma. Output is clamped to `[0, 1]`.
pub fn photometric(img: &Image, brightness: f64, contrast: f64, saturation: f64) -> Result<Image> {
    let mut data: Vec<f64> = img.data().iter().map(|v| v * brightness).collect();
    let mean = data.iter().sum::<f64>() / data.len() as f64;
    for v in &mut data {
        *v = (*v - mean) * contrast + mean;
    }
    if img.channels() == 3 {
        for p in data.chunks_exact_mut(3) {
            let l = luma(p[0], p[1], p[2]);
            for v in p.iter_mut() {
                *v = l + saturation * (*v - l);
            }
        }
    }
    Image::from_unclamped(img.height(), img.width(), img.channels(), data)
}

/// Resamples to `height x width` with the chosen filter (Catmull-Rom for
/// bicubic). Overshoot is clamped.
pub fn resize(img: &Image, height: usize, width: usize, method: ResizeMethod) -> Result<Image> {
    let filter = match method {
        ResizeMethod::Bilinear => FilterType::Triangle,
        ResizeMethod::Bicubic => FilterType::CatmullRom,
    };
    let (h, w) = (img.height() as u32, img.width() as u32);
    let samples: Vec<f32> = img.data().iter().map(|&v| v as f32).collect();
    let data: Vec<f64> = if img.channels() == 3 {
        let buf: ImageBuffer<Rgb<f32>, Vec<f32>> =
            ImageBuffer::from_raw(w, h, samples).expect("buffer size");
        imageops::resize(&buf, width as u32, height as u32, filter)
            .into_raw()
            .into_iter()
            .map(f64::from)
            .collect()
    } else {
        let buf: ImageBuffer<Luma<f32>, Vec<f32>> =
            ImageBuffer::from_raw(w, h, samples).expect("buffer size");
        imageops::resize(&buf, width as u32, height as u32, filter)
            .into_raw()
            .into_iter()
            .map(f64::from)
            .collect()
    };
    Image::from_unclamped(height, width, img.channels(), data)
}

/// Baseline JPEG encode at `quality`, then decode. Uses the `image` crate's
/// encoder, which does not subsample chroma.
pub fn jpeg_cycle(img: &Image, quality: u8) -> Result<Image> {
    check_quality(quality)?;
    let bytes = img.to_u8();
    let color = if img.channels() == 3 {
        ExtendedColorType::Rgb8
    } else {
        ExtendedColorType::L8
    };
    let mut encoded = Vec::new();
    JpegEncoder::new_with_quality(&mut encoded, quality).encode(
        &bytes,
        img.width() as u32,
        img.height() as u32,
        color,
    )?;
    let decoded = image::load_from_memory_with_format(&encoded, ImageFormat::Jpeg)?;
    let raw = if img.channels() == 3 {
        decoded.to_rgb8().into_raw()
    } else {
        decoded.to_luma8().into_raw()
    };
    Image::from_u8(img.height(), img.width(), img.channels(), &raw)
}
