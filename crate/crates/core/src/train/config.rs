use serde::{Deserialize, Serialize};

use crate::autodiff::OptimizerKind;
use crate::error::{Error, Result};
use crate::privacy::PrivacyParams;

/// Metric driving early stopping. `Fixed` trains to the iteration budget.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StoppingKind {
    Fixed,
    Fid,
    Is,
    Loss,
    Accuracy,
}

impl StoppingKind {
    pub fn lower_is_better(self) -> bool {
        matches!(self, Self::Fid | Self::Loss)
    }

    pub fn needs_classifier(self) -> bool {
        matches!(self, Self::Fid | Self::Is | Self::Accuracy)
    }
}

/// Lipschitz mechanism of a non-private critic.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lipschitz {
    GradientPenalty,
    WeightClip,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Wgan,
    Dpwgan,
    Gswgan,
}

impl Regime {
    pub fn is_private(self) -> bool {
        self != Self::Wgan
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Wgan => "wgan",
            Self::Dpwgan => "dpwgan",
            Self::Gswgan => "gswgan",
        })
    }
}

fn d_max_iterations() -> usize {
    50_000
}
fn d_critic_steps() -> usize {
    5
}
fn d_batch() -> usize {
    64
}
fn d_lr() -> f64 {
    1e-4
}
fn d_gp() -> f64 {
    10.0
}
fn d_eval_every() -> usize {
    500
}
fn d_patience() -> usize {
    2_500
}
fn d_weight_clip() -> f64 {
    0.01
}
fn d_eval_samples() -> usize {
    256
}
fn d_stopping() -> StoppingKind {
    StoppingKind::Fixed
}
fn d_lipschitz() -> Lipschitz {
    Lipschitz::GradientPenalty
}
fn d_optimizer() -> OptimizerKind {
    OptimizerKind::Adam
}
fn yes() -> bool {
    true
}

/// Hyperparameters of one GAN run. Iteration counts are generator steps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(default = "d_max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "d_critic_steps")]
    pub critic_steps: usize,
    #[serde(default = "d_batch")]
    pub batch_size: usize,
    #[serde(default = "d_lr")]
    pub lr_generator: f64,
    #[serde(default = "d_lr")]
    pub lr_critic: f64,
    #[serde(default = "d_optimizer")]
    pub optimizer: OptimizerKind,
    /// Halve both learning rates every third of the budget.
    #[serde(default)]
    pub lr_schedule: bool,
    #[serde(default = "d_gp")]
    pub gp_lambda: f64,
    /// Lipschitz mechanism of the plain WGAN critic.
    #[serde(default = "d_lipschitz")]
    pub lipschitz: Lipschitz,
    /// Weight bound for the weight-clipped WGAN critic; DPWGAN reads
    /// `privacy.weight_clip` first.
    #[serde(default = "d_weight_clip")]
    pub weight_clip: f64,
    /// Per-sample norm bound on the gradient entering a non-private generator.
    #[serde(default)]
    pub generator_clip: Option<f64>,
    #[serde(default = "d_eval_every")]
    pub eval_every: usize,
    #[serde(default = "d_patience")]
    pub patience: usize,
    #[serde(default = "d_stopping")]
    pub stopping: StoppingKind,
    /// Generated samples per metric evaluation.
    #[serde(default = "d_eval_samples")]
    pub eval_samples: usize,
    /// Class-uniform minibatches.
    #[serde(default = "yes")]
    pub conditional_sampling: bool,
    #[serde(default)]
    pub max_epsilon: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub privacy: Option<PrivacyParams>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.max_iterations == 0 || self.critic_steps == 0 || self.batch_size == 0 || self.eval_every == 0 {
            return bad("max_iterations, critic_steps, batch_size and eval_every must be positive".into());
        }
        for (name, lr) in [("lr_generator", self.lr_generator), ("lr_critic", self.lr_critic)] {
            if !(lr > 0.0 && lr.is_finite()) {
                return bad(format!("{name} must be positive, got {lr}"));
            }
        }
        if !(self.gp_lambda >= 0.0) {
            return bad(format!("gp_lambda must be ≥ 0, got {}", self.gp_lambda));
        }
        if !(self.weight_clip > 0.0) {
            return bad(format!("weight_clip must be positive, got {}", self.weight_clip));
        }
        if let Some(c) = self.generator_clip {
            if !(c > 0.0) {
                return bad(format!("generator_clip must be positive, got {c}"));
            }
        }
        if self.patience > self.max_iterations {
            return bad(format!("patience {} exceeds max_iterations {}", self.patience, self.max_iterations));
        }
        if self.patience % self.eval_every != 0 {
            return bad(format!("eval_every {} does not divide patience {}", self.eval_every, self.patience));
        }
        if self.eval_samples < 2 {
            return bad("eval_samples must be at least 2".into());
        }
        if let Some(e) = self.max_epsilon {
            if !(e > 0.0) {
                return bad(format!("max_epsilon must be positive, got {e}"));
            }
        }
        if let Some(p) = &self.privacy {
            p.validate()?;
        }
        Ok(())
    }

    pub(crate) fn validate_for(&self, regime: Regime) -> Result<&Option<PrivacyParams>> {
        self.validate()?;
        match (regime.is_private(), &self.privacy) {
            (false, Some(_)) => Err(Error::Config("wgan takes no privacy parameters".into())),
            (true, None) => Err(Error::Config(format!("{regime} needs privacy parameters"))),
            _ => Ok(&self.privacy),
        }
    }
}

fn d_epochs() -> usize {
    40
}
fn d_cls_batch() -> usize {
    32
}
fn d_cls_lr() -> f64 {
    1e-3
}
fn d_val() -> f64 {
    0.2
}

/// Hyperparameters of classifier training.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifierConfig {
    #[serde(default = "d_epochs")]
    pub epochs: usize,
    #[serde(default = "d_cls_batch")]
    pub batch_size: usize,
    #[serde(default = "d_cls_lr")]
    pub learning_rate: f64,
    #[serde(default = "yes")]
    pub lr_schedule: bool,
    /// Share of each class held out for checkpoint selection.
    #[serde(default = "d_val")]
    pub validation_fraction: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub privacy: Option<PrivacyParams>,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("classifier batch_size must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("classifier learning_rate must be positive, got {}", self.learning_rate)));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::Config(format!("validation_fraction must lie in [0, 1), got {}", self.validation_fraction)));
        }
        if let Some(p) = &self.privacy {
            p.validate()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = TrainConfig::default();
        assert_eq!((c.max_iterations, c.critic_steps, c.batch_size), (50_000, 5, 64));
        assert_eq!((c.lr_generator, c.lr_critic, c.gp_lambda), (1e-4, 1e-4, 10.0));
        assert_eq!((c.eval_every, c.patience), (500, 2_500));
        c.validate().unwrap();
        assert_eq!(ClassifierConfig::default().learning_rate, 1e-3);
    }

    #[test]
    fn rejects_bad_patience_and_unknown_keys() {
        let c = TrainConfig { eval_every: 300, ..TrainConfig::default() };
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let c = TrainConfig { patience: 60_000, ..TrainConfig::default() };
        assert!(c.validate().is_err());
        assert!(serde_json::from_str::<TrainConfig>(r#"{"batchsize": 3}"#).is_err());
        assert!(TrainConfig::default().validate_for(Regime::Gswgan).is_err());
    }
}
