//! Differential-privacy mechanics and Rényi-DP accounting.

mod mechanisms;
mod rdp;

pub use mechanisms::{clip_in_place, clip_per_sample, gaussian_sum, sanitize_generator_gradient, weight_clip};
pub use rdp::{calibrate_sigma, rdp_gaussian, rdp_subsampled_gaussian, RdpAccountant, DEFAULT_ORDERS};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn default_clip() -> f64 {
    1.0
}

/// Noise multiplier, clip bounds and accounting parameters of one run.
///
/// `sampling_rate` and `delta` are derived from the training set when absent
/// (`batch / n` and `1 / n²`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrivacyParams {
    pub noise_multiplier: f64,
    #[serde(default = "default_clip")]
    pub clip_bound: f64,
    #[serde(default)]
    pub weight_clip: Option<f64>,
    #[serde(default)]
    pub sampling_rate: Option<f64>,
    #[serde(default)]
    pub delta: Option<f64>,
}

impl PrivacyParams {
    pub fn new(noise_multiplier: f64) -> Self {
        Self { noise_multiplier, clip_bound: 1.0, weight_clip: None, sampling_rate: None, delta: None }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.noise_multiplier >= 0.0) || self.noise_multiplier.is_infinite() {
            return bad(format!("noise_multiplier must be a finite value ≥ 0, got {}", self.noise_multiplier));
        }
        if !(self.clip_bound > 0.0) {
            return bad(format!("clip_bound must be positive, got {}", self.clip_bound));
        }
        if let Some(c) = self.weight_clip {
            if !(c > 0.0) {
                return bad(format!("weight_clip must be positive, got {c}"));
            }
        }
        if let Some(q) = self.sampling_rate {
            if !(q > 0.0 && q <= 1.0) {
                return bad(format!("sampling_rate must lie in (0, 1], got {q}"));
            }
        }
        if let Some(d) = self.delta {
            if !(d > 0.0 && d < 1.0) {
                return bad(format!("delta must lie in (0, 1), got {d}"));
            }
        }
        Ok(())
    }

    pub fn sampling_rate_for(&self, batch: usize, n: usize) -> f64 {
        self.sampling_rate.unwrap_or((batch as f64 / n as f64).min(1.0))
    }

    pub fn delta_for(&self, n: usize) -> f64 {
        self.delta.unwrap_or(1.0 / (n as f64 * n as f64))
    }
}
