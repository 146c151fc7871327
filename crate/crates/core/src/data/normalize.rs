use serde::{Deserialize, Serialize};

use super::TimeSeriesDataset;
use crate::autodiff::Tensor;
use crate::error::{arg_err, dim_err, Result};

/// Per-channel standardization followed by a train-range rescale to `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizationMeta {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub constant: Vec<bool>,
    /// Minimum of the standardized train values.
    pub min: Vec<f64>,
    /// Maximum of the standardized train values.
    pub max: Vec<f64>,
}

impl NormalizationMeta {
    pub fn channels(&self) -> usize {
        self.mean.len()
    }

    fn standardize(&self, ch: usize, x: f64) -> f64 {
        (x - self.mean[ch]) / self.std[ch]
    }

    pub fn apply_value(&self, ch: usize, x: f64) -> f64 {
        if self.constant[ch] {
            return 0.5;
        }
        ((self.standardize(ch, x) - self.min[ch]) / (self.max[ch] - self.min[ch])).clamp(0.0, 1.0)
    }
}

fn channel_values(ds: &TimeSeriesDataset, ch: usize) -> impl Iterator<Item = f64> + '_ {
    let l = ds.length();
    (0..ds.len()).flat_map(move |i| ds.sample(i)[ch * l..(ch + 1) * l].iter().copied())
}

/// Fit statistics on a training split. Standard deviations are population
/// (divide by the count) over all values of a channel.
pub fn fit_normalizer(train: &TimeSeriesDataset) -> Result<NormalizationMeta> {
    if train.len() < 2 {
        return arg_err(format!("normalizer needs at least 2 samples, got {}", train.len()));
    }
    let c = train.channels();
    let mut meta = NormalizationMeta {
        mean: Vec::with_capacity(c),
        std: Vec::with_capacity(c),
        constant: Vec::with_capacity(c),
        min: Vec::with_capacity(c),
        max: Vec::with_capacity(c),
    };
    for ch in 0..c {
        let count = (train.len() * train.length()) as f64;
        let mean = channel_values(train, ch).sum::<f64>() / count;
        let var = channel_values(train, ch).map(|v| (v - mean).powi(2)).sum::<f64>() / count;
        let std = var.sqrt();
        let constant = !(std > 1e-12 * mean.abs().max(1.0));
        meta.mean.push(mean);
        meta.std.push(if constant { 1.0 } else { std });
        meta.constant.push(constant);
        if constant {
            meta.min.push(0.0);
            meta.max.push(0.0);
            continue;
        }
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in channel_values(train, ch) {
            let z = meta.standardize(ch, v);
            lo = lo.min(z);
            hi = hi.max(z);
        }
        meta.min.push(lo);
        meta.max.push(hi);
    }
    Ok(meta)
}

pub fn apply_normalizer(data: &TimeSeriesDataset, meta: &NormalizationMeta) -> Result<TimeSeriesDataset> {
    if data.channels() != meta.channels() {
        return dim_err(format!("dataset has {} channels, normalizer {}", data.channels(), meta.channels()));
    }
    let l = data.length();
    let values: Vec<f64> = data
        .samples()
        .data()
        .iter()
        .enumerate()
        .map(|(idx, &x)| meta.apply_value((idx / l) % meta.channels(), x))
        .collect();
    let samples = Tensor::new(data.samples().shape().to_vec(), values)?;
    let mut out = TimeSeriesDataset::new(samples, data.labels().to_vec(), data.class_names().to_vec(), data.split())?;
    if let Some(h) = data.header() {
        out.set_header(h.to_vec());
    }
    out.set_norm_meta(meta.clone());
    Ok(out)
}
