use serde::{Deserialize, Serialize};

use crate::autodiff::Tensor;
use crate::error::{arg_err, dim_err, Result};

/// `exp(mean_x KL(p(y|x) ‖ p(y)))` on a single split.
pub fn inception_score(probs: &Tensor) -> Result<f64> {
    if probs.shape().len() != 2 {
        return dim_err(format!("probabilities must be [n, K], got {:?}", probs.shape()));
    }
    let (n, k) = (probs.shape()[0], probs.shape()[1]);
    for (i, row) in probs.data().chunks(k).enumerate() {
        let s: f64 = row.iter().sum();
        if (s - 1.0).abs() > 1e-6 || row.iter().any(|&p| !(p >= 0.0)) {
            return arg_err(format!("row {i} is not a probability vector (sum {s})"));
        }
    }
    let mut marginal = vec![0.0; k];
    for row in probs.data().chunks(k) {
        for (m, p) in marginal.iter_mut().zip(row) {
            *m += p / n as f64;
        }
    }
    let mut kl = 0.0;
    for row in probs.data().chunks(k) {
        for (p, m) in row.iter().zip(&marginal) {
            if *p > 0.0 {
                kl += p * (p / m).ln();
            }
        }
    }
    Ok((kl / n as f64).exp().clamp(1.0, k as f64))
}

/// Per-class F1 averaged with true-class support weights. Undefined
/// precision or recall counts as zero.
pub fn weighted_f1(y_true: &[usize], y_pred: &[usize], k: usize) -> Result<f64> {
    if y_true.is_empty() || y_true.len() != y_pred.len() {
        return arg_err(format!("weighted f1 needs equal non-empty inputs ({} vs {})", y_true.len(), y_pred.len()));
    }
    if let Some(&bad) = y_true.iter().chain(y_pred).find(|&&l| l >= k) {
        return arg_err(format!("label {bad} out of range for {k} classes"));
    }
    let mut tp = vec![0usize; k];
    let mut pred = vec![0usize; k];
    let mut support = vec![0usize; k];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        support[t] += 1;
        pred[p] += 1;
        if t == p {
            tp[t] += 1;
        }
    }
    let n = y_true.len() as f64;
    let mut total = 0.0;
    for c in 0..k {
        if tp[c] == 0 {
            continue;
        }
        let precision = tp[c] as f64 / pred[c] as f64;
        let recall = tp[c] as f64 / support[c] as f64;
        let f1 = 2.0 * precision * recall / (precision + recall);
        total += f1 * support[c] as f64 / n;
    }
    Ok(total)
}

pub fn accuracy(y_true: &[usize], y_pred: &[usize]) -> f64 {
    let hits = y_true.iter().zip(y_pred).filter(|(a, b)| a == b).count();
    hits as f64 / y_true.len().max(1) as f64
}

/// Weighted F1 for classifiers trained on private (m−) or generated (m+)
/// data, evaluated on private (d−) or generated (d+) test data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourWayReport {
    #[serde(rename = "m-d-")]
    pub m_minus_d_minus: f64,
    #[serde(rename = "m-d+")]
    pub m_minus_d_plus: f64,
    #[serde(rename = "m+d-")]
    pub m_plus_d_minus: f64,
    #[serde(rename = "m+d+")]
    pub m_plus_d_plus: f64,
    pub baseline: f64,
}

impl FourWayReport {
    pub fn rows(&self) -> [(&'static str, f64); 5] {
        [
            ("m-d-", self.m_minus_d_minus),
            ("m-d+", self.m_minus_d_plus),
            ("m+d-", self.m_plus_d_minus),
            ("m+d+", self.m_plus_d_plus),
            ("baseline", self.baseline),
        ]
    }
}
