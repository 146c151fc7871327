use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{Split, TimeSeriesDataset};
use crate::autodiff::Tensor;
use crate::error::{arg_err, Result};
use crate::rng::{self, Rng};

/// Cycles of the sinusoid in `sine_vs_noise`.
pub const SINE_CYCLES: usize = 3;
/// Base cycle count `f₀` of `freq_classes`; class `k` has `(k+1)·f₀` cycles.
pub const BASE_CYCLES: usize = 2;
/// Noise standard deviation in `freq_classes`.
pub const FREQ_NOISE_STD: f64 = 0.3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticKind {
    /// Class 0: unit sinusoid at 10 dB SNR. Class 1: white noise of equal power.
    SineVsNoise,
    /// Class `k`: sinusoid with `(k+1)·f₀` cycles plus noise.
    FreqClasses,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub classes: usize,
    /// Samples per class in each of the train and test splits.
    pub n_per_class: usize,
    pub length: usize,
    #[serde(default = "one")]
    pub channels: usize,
    pub kind: SyntheticKind,
    #[serde(default)]
    pub seed: u64,
}

fn one() -> usize {
    1
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.classes < 2 {
            return arg_err("synthetic data needs at least 2 classes");
        }
        if self.length < 16 {
            return arg_err(format!("synthetic length must be at least 16, got {}", self.length));
        }
        if self.n_per_class == 0 || self.channels == 0 {
            return arg_err("n_per_class and channels must be positive");
        }
        match self.kind {
            SyntheticKind::SineVsNoise if self.classes != 2 => arg_err("sine_vs_noise has exactly 2 classes"),
            SyntheticKind::FreqClasses if 2 * self.classes * BASE_CYCLES >= self.length => arg_err(format!(
                "freq_classes with {} classes needs length above {}",
                self.classes,
                2 * self.classes * BASE_CYCLES
            )),
            _ => Ok(()),
        }
    }
}

fn series(spec: &SyntheticSpec, class: usize, rng: &mut Rng, out: &mut Vec<f64>) {
    let l = spec.length as f64;
    // Unit-amplitude sine has power 1/2; 10 dB SNR puts the noise power at 0.05.
    let sine_noise = 0.05f64.sqrt();
    for _ in 0..spec.channels {
        let phase = 2.0 * PI * rng::uniform(rng);
        for t in 0..spec.length {
            let v = match (spec.kind, class) {
                (SyntheticKind::SineVsNoise, 0) => {
                    (2.0 * PI * SINE_CYCLES as f64 * t as f64 / l + phase).sin() + sine_noise * rng::normal(rng)
                }
                (SyntheticKind::SineVsNoise, _) => 0.55f64.sqrt() * rng::normal(rng),
                (SyntheticKind::FreqClasses, k) => {
                    let cycles = ((k + 1) * BASE_CYCLES) as f64;
                    (2.0 * PI * cycles * t as f64 / l + phase).sin() + FREQ_NOISE_STD * rng::normal(rng)
                }
            };
            out.push(v);
        }
    }
}

fn split(spec: &SyntheticSpec, rng: &mut Rng, which: Split) -> Result<TimeSeriesDataset> {
    let n = spec.classes * spec.n_per_class;
    let mut values = Vec::with_capacity(n * spec.channels * spec.length);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let class = i % spec.classes;
        series(spec, class, rng, &mut values);
        labels.push(class);
    }
    let samples = Tensor::new(vec![n, spec.channels, spec.length], values)?;
    TimeSeriesDataset::new(samples, labels, TimeSeriesDataset::numbered_classes(spec.classes), which)
}

/// Deterministic (train, test) pair; raw values, not normalized.
pub fn make_synthetic(spec: &SyntheticSpec) -> Result<(TimeSeriesDataset, TimeSeriesDataset)> {
    spec.validate()?;
    let mut rng = rng::stream(spec.seed, rng::tags::SPLIT);
    let train = split(spec, &mut rng, Split::Train)?;
    let test = split(spec, &mut rng, Split::Test)?;
    Ok((train, test))
}
