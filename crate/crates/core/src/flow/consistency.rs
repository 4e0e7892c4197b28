use serde::{Deserialize, Serialize};

use super::blur::gaussian_blur;
use super::warp::warp_flow;
use super::FlowField;
use crate::error::{check_dims, Error, Result};
use crate::raster::ScalarField;

/// Thresholds for the forward-backward consistency test.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConsistencyConfig {
    /// Added to the forward-flow norm in the relative-error denominator.
    pub epsilon: f64,
    /// Relative error above which a pixel is inconsistent.
    pub tau: f64,
    /// Blur applied to the binary inconsistency map, in pixels.
    pub blur_sigma: f64,
}

impl Default for ConsistencyConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            tau: 0.85,
            blur_sigma: 7.0,
        }
    }
}

impl ConsistencyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!("epsilon {} must be > 0", self.epsilon)));
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::InvalidParameter(format!("tau {} must be in (0, 1)", self.tau)));
        }
        if !(self.blur_sigma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "blur sigma {} must be > 0",
                self.blur_sigma
            )));
        }
        Ok(())
    }
}

/// Soft per-pixel weight in `[0, 1]`; 1 where the flow is trusted.
#[derive(Clone, Debug, PartialEq)]
pub struct ConsistencyMask {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl ConsistencyMask {
    pub fn new(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 || values.len() != height * width {
            return Err(Error::InvalidRaster(format!(
                "mask of {height}x{width} needs {} values, got {}",
                height * width,
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidRaster(format!("mask value {bad} outside [0, 1]")));
        }
        Ok(Self {
            height,
            width,
            values,
        })
    }

    pub fn ones(height: usize, width: usize) -> Self {
        Self::filled(height, width, 1.0)
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self::filled(height, width, 0.0)
    }

    fn filled(height: usize, width: usize, v: f64) -> Self {
        Self {
            height,
            width,
            values: vec![v; height * width],
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Mean over pixels at least `margin` away from every border.
    pub fn interior_mean(&self, margin: usize) -> Option<f64> {
        if 2 * margin >= self.height || 2 * margin >= self.width {
            return None;
        }
        let mut sum = 0.0;
        let mut n = 0usize;
        for r in margin..self.height - margin {
            for c in margin..self.width - margin {
                sum += self.get(r, c);
                n += 1;
            }
        }
        Some(sum / n as f64)
    }

    pub fn as_field(&self) -> ScalarField {
        ScalarField::from_raw(self.height, self.width, self.values.clone())
    }
}

/// The binary map `1{ |U'_mo + U_om| / (|U_om| + eps) > tau }` where
/// `U'_mo` is the backward flow resampled into the original frame.
pub fn inconsistency_indicator(
    u_om: &FlowField,
    u_mo: &FlowField,
    cfg: &ConsistencyConfig,
) -> Result<ScalarField> {
    cfg.validate()?;
    check_dims(u_om.dims(), u_mo.dims())?;
    let resampled = warp_flow(u_mo, u_om)?;
    let (h, w) = u_om.dims();
    let data = resampled
        .vectors()
        .zip(u_om.vectors())
        .map(|((bx, by), (fx, fy))| {
            let err = (bx + fx).hypot(by + fy);
            let rel = err / (fx.hypot(fy) + cfg.epsilon);
            if rel > cfg.tau {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    Ok(ScalarField::from_raw(h, w, data))
}

/// Forward-backward consistency mask `M = 1 - blur(M_inconsistent)`,
/// clamped to `[0, 1]`.
pub fn consistency_mask(
    u_om: &FlowField,
    u_mo: &FlowField,
    cfg: &ConsistencyConfig,
) -> Result<ConsistencyMask> {
    let indicator = inconsistency_indicator(u_om, u_mo, cfg)?;
    let blurred = gaussian_blur(&indicator, cfg.blur_sigma)?;
    let (h, w) = blurred.dims();
    let values = blurred
        .data()
        .iter()
        .map(|b| (1.0 - b).clamp(0.0, 1.0))
        .collect();
    Ok(ConsistencyMask {
        height: h,
        width: w,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_inverse_constant_is_fully_consistent() {
        let u_om = FlowField::constant(32, 32, 2.0, 0.0);
        let u_mo = FlowField::constant(32, 32, -2.0, 0.0);
        let cfg = ConsistencyConfig::default();
        let ind = inconsistency_indicator(&u_om, &u_mo, &cfg).unwrap();
        assert!(ind.data().iter().all(|&v| v == 0.0));
        let m = consistency_mask(&u_om, &u_mo, &cfg).unwrap();
        assert!(m.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn missing_backward_flow_is_inconsistent() {
        // 2 / (2 + 0.1) = 0.952 > 0.85
        let u_om = FlowField::constant(64, 64, 2.0, 0.0);
        let u_mo = FlowField::zeros(64, 64);
        let cfg = ConsistencyConfig::default();
        let ind = inconsistency_indicator(&u_om, &u_mo, &cfg).unwrap();
        assert!(ind.data().iter().all(|&v| v == 1.0));
        let m = consistency_mask(&u_om, &u_mo, &cfg).unwrap();
        assert!(m.values().iter().all(|&v| v < 1e-12));
    }

    #[test]
    fn zero_flows_are_consistent() {
        let z = FlowField::zeros(16, 16);
        let m = consistency_mask(&z, &z, &ConsistencyConfig::default()).unwrap();
        assert!(m.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn threshold_is_strict() {
        // relative error exactly tau is consistent
        let cfg = ConsistencyConfig {
            epsilon: 1.0,
            tau: 0.5,
            blur_sigma: 1.0,
        };
        let u_om = FlowField::constant(4, 4, 1.0, 0.0);
        let u_mo = FlowField::zeros(4, 4);
        let ind = inconsistency_indicator(&u_om, &u_mo, &cfg).unwrap();
        assert!(ind.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn config_validation() {
        let base = ConsistencyConfig::default();
        assert!(base.validate().is_ok());
        assert!(ConsistencyConfig { tau: 1.0, ..base }.validate().is_err());
        assert!(ConsistencyConfig { epsilon: 0.0, ..base }.validate().is_err());
        assert!(ConsistencyConfig { blur_sigma: -1.0, ..base }.validate().is_err());
        let z = FlowField::zeros(4, 4);
        assert!(consistency_mask(&z, &FlowField::zeros(4, 5), &base).is_err());
    }

    #[test]
    fn mask_rejects_out_of_range() {
        assert!(ConsistencyMask::new(1, 2, vec![0.0, 1.1]).is_err());
        assert!(ConsistencyMask::new(1, 2, vec![0.0]).is_err());
    }
}
