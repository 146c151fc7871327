use serde::{Deserialize, Serialize};

use super::params::ParamSet;
use crate::error::{arg_err, dim_err, Result};

pub const ADAM_BETAS: (f64, f64) = (0.9, 0.999);
pub const ADAM_EPS: f64 = 1e-8;
pub const RMSPROP_DECAY: f64 = 0.9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Adam,
    Rmsprop,
}

/// Multiply the learning rate by `factor` every `every` steps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepDecay {
    pub every: usize,
    pub factor: f64,
}

impl StepDecay {
    /// Halve the rate every third of `budget` steps.
    pub fn thirds(budget: usize) -> Self {
        Self { every: (budget / 3).max(1), factor: 0.5 }
    }

    pub fn rate(&self, base: f64, step: usize) -> f64 {
        base * self.factor.powi((step / self.every.max(1)) as i32)
    }
}

/// Optimizer state with per-parameter moment buffers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Optimizer {
    kind: OptimizerKind,
    learning_rate: f64,
    schedule: Option<StepDecay>,
    step: usize,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, learning_rate: f64, params: &ParamSet) -> Result<Self> {
        if !(learning_rate > 0.0) || !learning_rate.is_finite() {
            return arg_err(format!("learning rate must be positive, got {learning_rate}"));
        }
        let zeros: Vec<Vec<f64>> = (0..params.len()).map(|i| vec![0.0; params.values(i).len()]).collect();
        let first = if kind == OptimizerKind::Adam { zeros.clone() } else { Vec::new() };
        Ok(Self { kind, learning_rate, schedule: None, step: 0, first, second: zeros })
    }

    pub fn adam(learning_rate: f64, params: &ParamSet) -> Result<Self> {
        Self::new(OptimizerKind::Adam, learning_rate, params)
    }

    pub fn with_schedule(mut self, schedule: Option<StepDecay>) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn kind(&self) -> OptimizerKind {
        self.kind
    }

    pub fn steps(&self) -> usize {
        self.step
    }

    pub fn current_rate(&self) -> f64 {
        match self.schedule {
            Some(s) => s.rate(self.learning_rate, self.step),
            None => self.learning_rate,
        }
    }

    /// Apply one update in place.
    pub fn step(&mut self, params: &mut ParamSet, grads: &[Vec<f64>]) -> Result<()> {
        params.check_aligned(grads)?;
        if self.second.len() != params.len()
            || self.second.iter().zip(grads).any(|(m, g)| m.len() != g.len())
        {
            return dim_err("optimizer moment buffers do not match the parameter set");
        }
        let lr = self.current_rate();
        self.step += 1;
        match self.kind {
            OptimizerKind::Adam => {
                let (b1, b2) = ADAM_BETAS;
                let c1 = 1.0 - b1.powi(self.step as i32);
                let c2 = 1.0 - b2.powi(self.step as i32);
                for (i, g) in grads.iter().enumerate() {
                    let p = params.values_mut(i);
                    let (m, v) = (&mut self.first[i], &mut self.second[i]);
                    for j in 0..g.len() {
                        m[j] = b1 * m[j] + (1.0 - b1) * g[j];
                        v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
                        let mh = m[j] / c1;
                        let vh = v[j] / c2;
                        p[j] -= lr * mh / (vh.sqrt() + ADAM_EPS);
                    }
                }
            }
            OptimizerKind::Rmsprop => {
                for (i, g) in grads.iter().enumerate() {
                    let p = params.values_mut(i);
                    let v = &mut self.second[i];
                    for j in 0..g.len() {
                        v[j] = RMSPROP_DECAY * v[j] + (1.0 - RMSPROP_DECAY) * g[j] * g[j];
                        p[j] -= lr * g[j] / (v[j].sqrt() + ADAM_EPS);
                    }
                }
            }
        }
        Ok(())
    }
}
