//! Root-raised-cosine pulse and receiver front-end filters.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Root-raised-cosine pulse, defined by its spectrum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    pub rolloff: f64,
    /// Baud.
    pub symbol_rate: f64,
}

impl PulseSpec {
    pub fn new(rolloff: f64, symbol_rate: f64) -> Result<Self> {
        let p = Self {
            rolloff,
            symbol_rate,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.rolloff) {
            return Err(Error::InvalidSpec(format!(
                "rolloff must lie in [0, 1], got {}",
                self.rolloff
            )));
        }
        if !(self.symbol_rate > 0.0) || !self.symbol_rate.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "symbol rate must be positive, got {}",
                self.symbol_rate
            )));
        }
        Ok(())
    }

    pub fn period(&self) -> f64 {
        1.0 / self.symbol_rate
    }

    /// Two-sided occupied bandwidth `(1 + rolloff) / T`.
    pub fn occupied_bandwidth(&self) -> f64 {
        (1.0 + self.rolloff) * self.symbol_rate
    }

    /// Highest frequency with nonzero spectrum, `(1 + rolloff) / (2T)`.
    pub fn band_edge(&self) -> f64 {
        0.5 * self.occupied_bandwidth()
    }

    /// Raised-cosine spectrum with unit DC value.
    pub fn raised_cosine(&self, f: f64) -> f64 {
        let t = self.period();
        let a = f.abs() * t;
        let b = self.rolloff;
        let lo = 0.5 * (1.0 - b);
        let hi = 0.5 * (1.0 + b);
        if a <= lo {
            1.0
        } else if a > hi {
            0.0
        } else {
            0.5 * (1.0 + (std::f64::consts::PI / b * (a - lo)).cos())
        }
    }

    /// Root-raised-cosine amplitude spectrum with unit DC value.
    pub fn rrc(&self, f: f64) -> f64 {
        self.raised_cosine(f).sqrt()
    }
}

/// Analog filter in front of the sampler of the equalizer input.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReceiverFilter {
    /// RRC matched to the transmit pulse.
    MatchedRrc,
    /// Ideal low-pass keeping `[-s/(2T), s/(2T))`, i.e. exactly the band the
    /// `s`-fold sampler can represent.
    AntiAlias,
}

impl ReceiverFilter {
    /// Matched RRC at one sample per symbol, ideal anti-aliasing above.
    ///
    /// At `s >= 2` the anti-aliasing filter keeps all the signal and leaves the
    /// sampled noise white, so the sampled model reaches the matched-filter
    /// bound exactly; a matched RRC would color the noise at `s >= 2`.
    pub fn default_for(s: usize) -> Self {
        if s <= 1 {
            ReceiverFilter::MatchedRrc
        } else {
            ReceiverFilter::AntiAlias
        }
    }

    /// Amplitude response at `f` for a sampler running at `s` samples per
    /// symbol.
    pub fn response(&self, pulse: &PulseSpec, s: usize, f: f64) -> f64 {
        match self {
            ReceiverFilter::MatchedRrc => pulse.rrc(f),
            ReceiverFilter::AntiAlias => {
                let edge = 0.5 * s as f64 * pulse.symbol_rate;
                let tol = 1e-9 * pulse.symbol_rate;
                // Half-open so that folding at the sampler keeps the noise white.
                if f >= -edge - tol && f < edge - tol {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectrum_landmarks() {
        let p = PulseSpec::new(0.1, 30e9).unwrap();
        assert_eq!(p.rrc(0.0), 1.0);
        assert!((p.raised_cosine(15e9) - 0.5).abs() < 1e-12);
        assert_eq!(p.rrc(16.6e9), 0.0);
        assert!((p.occupied_bandwidth() - 33e9).abs() < 1e-3);
    }

    #[test]
    fn folded_raised_cosine_is_flat() {
        // Nyquist criterion: sum_k RC(f + k/T) = 1.
        let p = PulseSpec::new(0.35, 1.0).unwrap();
        for i in 0..50 {
            let f = -0.5 + i as f64 / 50.0;
            let s: f64 = (-2..=2).map(|k| p.raised_cosine(f + k as f64)).sum();
            assert!((s - 1.0).abs() < 1e-12, "f={f} sum={s}");
        }
    }

    #[test]
    fn anti_alias_is_half_open() {
        let p = PulseSpec::new(0.1, 1.0).unwrap();
        let r = ReceiverFilter::AntiAlias;
        assert_eq!(r.response(&p, 2, -1.0), 1.0);
        assert_eq!(r.response(&p, 2, 1.0), 0.0);
        assert_eq!(r.response(&p, 2, 0.99), 1.0);
    }

    #[test]
    fn rejects_bad_rolloff() {
        assert!(PulseSpec::new(1.5, 1.0).is_err());
        assert!(PulseSpec::new(0.1, 0.0).is_err());
    }
}
