//! Labeled time-series datasets: `.ts`/CSV ingestion, normalization,
//! synthetic generators and minibatch sampling.

mod batch;
mod csv;
mod normalize;
mod synthetic;
mod ts;

pub use batch::sample_batch;
pub use csv::parse_csv;
pub use normalize::{apply_normalizer, fit_normalizer, NormalizationMeta};
pub use synthetic::{make_synthetic, SyntheticKind, SyntheticSpec};
pub use ts::{parse_ts, serialize_ts};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::autodiff::Tensor;
use crate::error::{arg_err, dim_err, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

/// Samples `[n × channels × length]` with labels in `[0, K)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeriesDataset {
    samples: Tensor,
    labels: Vec<usize>,
    class_names: Vec<String>,
    split: Split,
    norm_meta: Option<NormalizationMeta>,
    /// Header lines as parsed, re-emitted verbatim on serialization.
    header: Option<Vec<String>>,
}

impl TimeSeriesDataset {
    pub fn new(samples: Tensor, labels: Vec<usize>, class_names: Vec<String>, split: Split) -> Result<Self> {
        if samples.shape().len() != 3 {
            return dim_err(format!("samples must be [n, channels, length], got {:?}", samples.shape()));
        }
        if samples.shape()[0] != labels.len() {
            return dim_err(format!("{} samples but {} labels", samples.shape()[0], labels.len()));
        }
        if class_names.is_empty() {
            return arg_err("a dataset needs at least one class");
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_names.len()) {
            return arg_err(format!("label {bad} out of range for {} classes", class_names.len()));
        }
        Ok(Self { samples, labels, class_names, split, norm_meta: None, header: None })
    }

    /// Class names `"0".."K-1"`.
    pub fn numbered_classes(k: usize) -> Vec<String> {
        (0..k).map(|i| i.to_string()).collect()
    }

    pub fn samples(&self) -> &Tensor {
        &self.samples
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn channels(&self) -> usize {
        self.samples.shape()[1]
    }

    pub fn length(&self) -> usize {
        self.samples.shape()[2]
    }

    pub fn split(&self) -> Split {
        self.split
    }

    pub fn with_split(mut self, split: Split) -> Self {
        self.split = split;
        self
    }

    pub fn norm_meta(&self) -> Option<&NormalizationMeta> {
        self.norm_meta.as_ref()
    }

    pub fn header(&self) -> Option<&[String]> {
        self.header.as_deref()
    }

    pub(crate) fn set_header(&mut self, header: Vec<String>) {
        self.header = Some(header);
    }

    pub(crate) fn set_norm_meta(&mut self, meta: NormalizationMeta) {
        self.norm_meta = Some(meta);
    }

    /// Values of sample `i`, channels concatenated.
    pub fn sample(&self, i: usize) -> &[f64] {
        self.samples.row(i)
    }

    /// Rows with the given indices, keeping class names and metadata.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let samples = self.samples.select(indices)?;
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        let mut out = Self::new(samples, labels, self.class_names.clone(), self.split)?;
        out.norm_meta = self.norm_meta.clone();
        Ok(out)
    }

    /// Indices of the samples of each class.
    pub fn class_indices(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_classes()];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l].push(i);
        }
        out
    }

    pub fn class_counts(&self) -> Vec<usize> {
        self.class_indices().iter().map(Vec::len).collect()
    }

    /// Hex SHA-256 over the shape, labels and value bits.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        for d in self.samples.shape() {
            h.update((*d as u64).to_le_bytes());
        }
        for l in &self.labels {
            h.update((*l as u64).to_le_bytes());
        }
        for v in self.samples.data() {
            h.update(v.to_le_bytes());
        }
        for name in &self.class_names {
            h.update(name.as_bytes());
            h.update([0]);
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}
