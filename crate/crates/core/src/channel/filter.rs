use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Zero-phase super-Gaussian band-pass, applied identically to every mode.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub order: f64,
    /// Full 3 dB bandwidth, Hz.
    pub bandwidth_3db: f64,
    #[serde(default)]
    pub center: f64,
}

impl FilterSpec {
    pub fn new(order: f64, bandwidth_3db: f64, center: f64) -> Result<Self> {
        let f = Self {
            order,
            bandwidth_3db,
            center,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.order >= 1.0) || !self.order.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "filter order must be >= 1, got {}",
                self.order
            )));
        }
        if !(self.bandwidth_3db > 0.0) || !self.bandwidth_3db.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "filter bandwidth must be > 0, got {}",
                self.bandwidth_3db
            )));
        }
        if !self.center.is_finite() {
            return Err(Error::InvalidSpec("filter center must be finite".into()));
        }
        Ok(())
    }

    /// `|G(f)| = 2^(-(1/2) (2 (f - center) / B)^(2 order))`, real and nonnegative.
    pub fn gain(&self, f: f64) -> f64 {
        let x = (2.0 * (f - self.center) / self.bandwidth_3db).abs();
        (-0.5 * std::f64::consts::LN_2 * x.powf(2.0 * self.order)).exp()
    }

    /// Power transfer `|G(f)|^2`.
    pub fn power_gain(&self, f: f64) -> f64 {
        let g = self.gain(f);
        g * g
    }
}
