use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use super::cap_magnitude;
use crate::error::{Error, Result};
use crate::flow::{gaussian_blur, FlowField};
use crate::raster::{Image, ScalarField};

/// Smooth random warp: white Gaussian noise per component, blurred with
/// `sigma = min(height, width) / 8` and rescaled so the peak magnitude is
/// `amplitude`.
pub fn random_smooth_warp(height: usize, width: usize, seed: u64, amplitude: f64) -> Result<FlowField> {
    if height == 0 || width == 0 {
        return Err(Error::InvalidParameter(format!("dims {height}x{width}")));
    }
    if !(amplitude >= 0.0) || !amplitude.is_finite() {
        return Err(Error::InvalidParameter(format!("amplitude {amplitude} must be >= 0")));
    }
    if amplitude == 0.0 {
        return Ok(FlowField::zeros(height, width));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigma = (height.min(width) as f64 / 8.0).max(0.5);
    let mut noise = || {
        let data: Vec<f64> = (0..height * width)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        gaussian_blur(&ScalarField::from_raw(height, width, data), sigma)
    };
    let dx = noise()?.into_data();
    let dy = noise()?.into_data();
    let flow = FlowField::from_raw(height, width, dx, dy);
    let peak = flow.max_magnitude();
    if peak == 0.0 {
        return Ok(flow);
    }
    Ok(cap_magnitude(flow.scaled(amplitude / peak), amplitude))
}

/// Gaussian noise image with mean 0.5 and standard deviation 0.15,
/// clamped to `[0, 1]`.
pub fn make_noise_image(height: usize, width: usize, channels: usize, seed: u64) -> Result<Image> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = Normal::new(0.5, 0.15).expect("valid normal");
    let data = (0..height * width * channels)
        .map(|_| dist.sample(&mut rng))
        .collect();
    Image::from_unclamped(height, width, channels, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_amplitude_is_zero_field() {
        assert_eq!(random_smooth_warp(16, 16, 1, 0.0).unwrap(), FlowField::zeros(16, 16));
    }

    #[test]
    fn peak_matches_amplitude() {
        for seed in 0..4 {
            let f = random_smooth_warp(64, 48, seed, 3.0).unwrap();
            let m = f.max_magnitude();
            assert!(m <= 3.0 && m > 3.0 - 1e-9);
        }
    }

    #[test]
    fn deterministic_and_seed_dependent() {
        let a = random_smooth_warp(32, 32, 5, 2.0).unwrap();
        assert_eq!(a, random_smooth_warp(32, 32, 5, 2.0).unwrap());
        assert_ne!(a, random_smooth_warp(32, 32, 6, 2.0).unwrap());
    }

    #[test]
    fn autocorrelation_length_exceeds_half_sigma() {
        // Empirical autocorrelation of dx along rows, pooled over samples.
        let (h, w) = (64, 64);
        let sigma = 8.0;
        let lag_of_interest = (sigma / 2.0) as usize;
        let mut num = 0.0;
        let mut den = 0.0;
        for seed in 0..20 {
            let f = random_smooth_warp(h, w, seed, 1.0).unwrap();
            let mean = f.dx().iter().sum::<f64>() / (h * w) as f64;
            for r in 0..h {
                for c in 0..w {
                    let a = f.get(r, c).0 - mean;
                    den += a * a;
                    if c + lag_of_interest < w {
                        num += a * (f.get(r, c + lag_of_interest).0 - mean);
                    }
                }
            }
        }
        let rho = num / den * (w as f64 / (w - lag_of_interest) as f64);
        // correlation at lag sigma/2 still above 1/e
        assert!(rho > (-1.0f64).exp(), "rho {rho}");
    }

    #[test]
    fn noise_image_statistics() {
        let img = make_noise_image(256, 256, 1, 3).unwrap();
        let mean = img.data().iter().sum::<f64>() / img.data().len() as f64;
        assert!((0.48..=0.52).contains(&mean));
        assert!(img.data().iter().all(|v| (0.0..=1.0).contains(v)));
        assert_eq!(img, make_noise_image(256, 256, 1, 3).unwrap());
        assert_ne!(img, make_noise_image(256, 256, 1, 4).unwrap());
    }
}
