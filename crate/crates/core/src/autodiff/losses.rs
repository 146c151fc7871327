use super::tape::{Tape, Var};
use super::tensor::Tensor;
use crate::error::{arg_err, dim_err, Result};
use crate::rng::{self, Rng};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WassersteinLosses {
    /// `mean(fake) - mean(real)`, minimized by the critic.
    pub critic: f64,
    /// `-mean(fake)`, minimized by the generator.
    pub generator: f64,
}

pub fn wasserstein_losses(critic_real: &[f64], critic_fake: &[f64]) -> Result<WassersteinLosses> {
    if critic_real.is_empty() || critic_fake.is_empty() {
        return arg_err("wasserstein losses need non-empty critic batches");
    }
    let mean = |v: &[f64]| v.iter().fold(0.0, |a, x| a + x) / v.len() as f64;
    let (r, f) = (mean(critic_real), mean(critic_fake));
    Ok(WassersteinLosses { critic: f - r, generator: -f })
}

/// `λ · mean((‖∇ critic(x̂)‖₂ − 1)²)` over per-sample interpolates
/// `x̂ = ε·real + (1−ε)·fake`, `ε ~ U(0,1)` drawn once per sample.
///
/// `critic` maps a `[N × ...]` batch on the tape to `[N]` scores. The returned
/// scalar is differentiable with respect to the critic's parameters.
pub fn gradient_penalty<F>(tape: &mut Tape, critic: F, real: &Tensor, fake: &Tensor, lambda: f64, rng: &mut Rng) -> Result<Var>
where
    F: FnOnce(&mut Tape, Var) -> Result<Var>,
{
    if real.shape() != fake.shape() {
        return dim_err(format!("gradient penalty: real {:?} vs fake {:?}", real.shape(), fake.shape()));
    }
    if !(lambda >= 0.0) {
        return arg_err(format!("gradient penalty coefficient must be non-negative, got {lambda}"));
    }
    if lambda == 0.0 {
        return Ok(tape.constant(Tensor::scalar(0.0)));
    }
    let n = real.shape()[0];
    let row = real.numel() / n;
    let mut mixed = Vec::with_capacity(real.numel());
    for i in 0..n {
        let eps = rng::uniform(rng);
        for (r, f) in real.row(i).iter().zip(fake.row(i)) {
            mixed.push(eps * r + (1.0 - eps) * f);
        }
    }
    let xhat = tape.constant(Tensor::new(real.shape().to_vec(), mixed)?);
    let scores = critic(tape, xhat)?;
    if tape.shape(scores) != [n] {
        return dim_err(format!("critic returned {:?} for a batch of {n}", tape.shape(scores)));
    }
    let total = tape.sum(scores);
    let grad = tape.grad_graph(total, xhat)?;
    let flat = tape.reshape(grad, &[n, row])?;
    let norms = tape.row_norms(flat)?;
    let shifted = tape.add_scalar(norms, -1.0);
    let sq = tape.square(shifted);
    let mean = tape.mean(sq);
    Ok(tape.scale(mean, lambda))
}
