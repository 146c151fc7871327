//! Private time-series GANs: tensors and autodiff, datasets, networks,
//! differential privacy, training regimes and evaluation metrics.

pub mod autodiff;
pub mod data;
pub mod error;
pub mod metrics;
pub mod nets;
pub mod privacy;
pub mod rng;
pub mod train;

pub use error::{Error, Result};
