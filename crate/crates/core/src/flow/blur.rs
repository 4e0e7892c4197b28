use crate::error::{Error, Result};
use crate::raster::ScalarField;

/// Padding policy for the blur.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Boundary {
    /// Repeat the border sample.
    Clamp,
    /// Treat the field as periodic.
    Wrap,
}

/// Discrete Gaussian of radius `ceil(3 sigma)`, normalized to sum 1.
pub fn gaussian_kernel(sigma: f64) -> Result<Vec<f64>> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidParameter(format!("blur sigma {sigma} must be > 0")));
    }
    let radius = (3.0 * sigma).ceil() as i64;
    let denom = 2.0 * sigma * sigma;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / denom).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    Ok(k)
}

/// Separable Gaussian blur with edge-clamp padding.
pub fn gaussian_blur(field: &ScalarField, sigma: f64) -> Result<ScalarField> {
    gaussian_blur_with(field, sigma, Boundary::Clamp)
}

pub fn gaussian_blur_with(field: &ScalarField, sigma: f64, boundary: Boundary) -> Result<ScalarField> {
    let kernel = gaussian_kernel(sigma)?;
    let (h, w) = field.dims();
    let rows = convolve_rows(field.data(), h, w, &kernel, boundary);
    let transposed = transpose(&rows, h, w);
    let cols = convolve_rows(&transposed, w, h, &kernel, boundary);
    Ok(ScalarField::from_raw(h, w, transpose(&cols, w, h)))
}

#[inline]
fn pad_index(i: i64, len: usize, boundary: Boundary) -> usize {
    match boundary {
        Boundary::Clamp => i.clamp(0, len as i64 - 1) as usize,
        Boundary::Wrap => i.rem_euclid(len as i64) as usize,
    }
}

fn convolve_rows(data: &[f64], h: usize, w: usize, kernel: &[f64], boundary: Boundary) -> Vec<f64> {
    let radius = (kernel.len() / 2) as i64;
    let mut out = vec![0.0; data.len()];
    let mut padded = vec![0.0; w + 2 * radius as usize];
    for r in 0..h {
        let row = &data[r * w..(r + 1) * w];
        for (j, p) in padded.iter_mut().enumerate() {
            *p = row[pad_index(j as i64 - radius, w, boundary)];
        }
        // offsets from the centre keep constant runs exact
        for (c, o) in out[r * w..(r + 1) * w].iter_mut().enumerate() {
            let centre = row[c];
            *o = centre
                + padded[c..c + kernel.len()]
                    .iter()
                    .zip(kernel)
                    .map(|(a, b)| (a - centre) * b)
                    .sum::<f64>();
        }
    }
    out
}

fn transpose(data: &[f64], h: usize, w: usize) -> Vec<f64> {
    let mut out = vec![0.0; data.len()];
    for r in 0..h {
        for c in 0..w {
            out[c * h + r] = data[r * w + c];
        }
    }
    out
}
