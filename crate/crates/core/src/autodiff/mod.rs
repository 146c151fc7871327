//! Dense tensors, a reverse-mode tape, loss helpers and optimizers.

pub mod check;
mod kernels;
pub mod losses;
pub mod optim;
pub mod params;
pub mod tape;
pub mod tensor;

pub use losses::{gradient_penalty, wasserstein_losses, WassersteinLosses};
pub use optim::{Optimizer, OptimizerKind, StepDecay};
pub use params::ParamSet;
pub use tape::{Activation, Gradients, Reduction, Tape, Var, LEAKY_SLOPE};
pub use tensor::Tensor;

#[cfg(test)]
mod gradcheck;
