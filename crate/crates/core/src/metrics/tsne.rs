//! Exact t-SNE with per-point perplexity calibration.

use serde::{Deserialize, Serialize};

use crate::autodiff::Tensor;
use crate::error::{arg_err, dim_err, Result};
use crate::rng;

const ENTROPY_TOL: f64 = 1e-9;
const EXAGGERATION: f64 = 12.0;
const EXAGGERATION_ITERS: usize = 250;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TsneParams {
    #[serde(default = "default_perplexity")]
    pub perplexity: f64,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_perplexity() -> f64 {
    30.0
}
fn default_iterations() -> usize {
    1000
}
fn default_lr() -> f64 {
    200.0
}

impl Default for TsneParams {
    fn default() -> Self {
        Self { perplexity: default_perplexity(), iterations: default_iterations(), learning_rate: default_lr(), seed: 0 }
    }
}

fn squared_distances(x: &Tensor) -> Result<(usize, Vec<f64>)> {
    if x.shape().len() != 2 {
        return dim_err(format!("t-SNE input must be [n, d], got {:?}", x.shape()));
    }
    let n = x.shape()[0];
    let mut d2 = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let v: f64 = x.row(i).iter().zip(x.row(j)).map(|(a, b)| (a - b) * (a - b)).sum();
            d2[i * n + j] = v;
            d2[j * n + i] = v;
        }
    }
    Ok((n, d2))
}

/// Gaussian conditional row for point `i` at precision `beta`; returns the
/// row (self entry zero) and its Shannon entropy in nats.
fn conditional_row(d2: &[f64], i: usize, beta: f64) -> (Vec<f64>, f64) {
    let shift = d2.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &v)| v).fold(f64::INFINITY, f64::min);
    let mut p: Vec<f64> = d2.iter().enumerate().map(|(j, &v)| if j == i { 0.0 } else { (-(v - shift) * beta).exp() }).collect();
    let z: f64 = p.iter().sum();
    let mut weighted = 0.0;
    for (j, v) in p.iter_mut().enumerate() {
        *v /= z;
        if j != i {
            weighted += *v * (d2[j] - shift);
        }
    }
    (p, z.ln() + beta * weighted)
}

/// Conditional affinities `p_{j|i}` with each row's entropy matched to
/// `ln(perplexity)` by bisection over the precision. Returns the `[n × n]`
/// row-stochastic matrix and the achieved entropies.
pub fn conditional_affinities(x: &Tensor, perplexity: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let (n, d2) = squared_distances(x)?;
    if n < 2 || !(perplexity >= 2.0) || perplexity > (n as f64 - 1.0) / 3.0 {
        return arg_err(format!("perplexity {perplexity} outside [2, (n−1)/3] for n = {n}"));
    }
    let target = perplexity.ln();
    let mut p = vec![0.0; n * n];
    let mut entropies = Vec::with_capacity(n);
    for i in 0..n {
        let row_d = &d2[i * n..(i + 1) * n];
        let (mut beta, mut lo, mut hi) = (1.0, 0.0, f64::INFINITY);
        let (mut row, mut h) = conditional_row(row_d, i, beta);
        for _ in 0..200 {
            if (h - target).abs() < ENTROPY_TOL {
                break;
            }
            if h > target {
                lo = beta;
                beta = if hi.is_finite() { 0.5 * (beta + hi) } else { beta * 2.0 };
            } else {
                hi = beta;
                beta = 0.5 * (beta + lo);
            }
            (row, h) = conditional_row(row_d, i, beta);
        }
        p[i * n..(i + 1) * n].copy_from_slice(&row);
        entropies.push(h);
    }
    Ok((p, entropies))
}

/// Symmetrized joint affinities `(P + Pᵀ) / 2n`.
pub fn joint_affinities(x: &Tensor, perplexity: f64) -> Result<Vec<f64>> {
    let (cond, _) = conditional_affinities(x, perplexity)?;
    let n = x.shape()[0];
    let mut p = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            p[i * n + j] = (cond[i * n + j] + cond[j * n + i]) / (2.0 * n as f64);
        }
    }
    Ok(p)
}

/// Two-dimensional embedding by exact t-SNE: Student-t output kernel,
/// early exaggeration ×12 for 250 iterations, momentum 0.5 then 0.8, and
/// per-coordinate adaptive gains.
pub fn tsne(x: &Tensor, params: &TsneParams) -> Result<Tensor> {
    let p = joint_affinities(x, params.perplexity)?;
    let n = x.shape()[0];
    let mut r = rng::stream(params.seed, rng::tags::EVAL);
    let mut y: Vec<f64> = (0..2 * n).map(|_| 1e-2 * rng::normal(&mut r)).collect();
    let mut update = vec![0.0; 2 * n];
    let mut gains = vec![1.0f64; 2 * n];
    let mut num = vec![0.0; n * n];
    let mut grad = vec![0.0; 2 * n];
    for it in 0..params.iterations {
        let exaggeration = if it < EXAGGERATION_ITERS { EXAGGERATION } else { 1.0 };
        let momentum = if it < EXAGGERATION_ITERS { 0.5 } else { 0.8 };
        let mut z = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                let dx = y[2 * i] - y[2 * j];
                let dy = y[2 * i + 1] - y[2 * j + 1];
                let v = 1.0 / (1.0 + dx * dx + dy * dy);
                num[i * n + j] = v;
                num[j * n + i] = v;
                z += 2.0 * v;
            }
        }
        grad.fill(0.0);
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let q = (num[i * n + j] / z).max(1e-12);
                let m = 4.0 * (exaggeration * p[i * n + j].max(1e-12) - q) * num[i * n + j];
                grad[2 * i] += m * (y[2 * i] - y[2 * j]);
                grad[2 * i + 1] += m * (y[2 * i + 1] - y[2 * j + 1]);
            }
        }
        for k in 0..2 * n {
            gains[k] = if (grad[k] > 0.0) != (update[k] > 0.0) { gains[k] + 0.2 } else { gains[k] * 0.8 };
            gains[k] = gains[k].max(0.01);
            update[k] = momentum * update[k] - params.learning_rate * gains[k] * grad[k];
            y[k] += update[k];
        }
        for c in 0..2 {
            let mean = (0..n).map(|i| y[2 * i + c]).sum::<f64>() / n as f64;
            for i in 0..n {
                y[2 * i + c] -= mean;
            }
        }
    }
    Tensor::new(vec![n, 2], y)
}
