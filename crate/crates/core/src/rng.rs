//! Seeded randomness. Every stochastic operation takes an explicit [`Rng`];
//! nothing in the crate reads ambient entropy.

use rand::{Rng as _, RngCore, SeedableRng};
use rand_distr::StandardNormal;

/// 64-bit-state generator threaded through all stochastic code.
pub type Rng = rand_xoshiro::SplitMix64;

pub fn seeded(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

/// Derive an independent stream from a master seed and a stream tag.
///
/// Used to give training, noise and evaluation their own generators so that
/// consuming draws on one path never shifts another.
pub fn stream(seed: u64, tag: u64) -> Rng {
    let mut mixer = seeded(seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let _ = mixer.next_u64();
    seeded(mixer.next_u64())
}

pub fn normal(rng: &mut Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn uniform(rng: &mut Rng) -> f64 {
    rng.random::<f64>()
}

pub fn normal_vec(rng: &mut Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| normal(rng)).collect()
}

/// Named stream tags.
pub mod tags {
    pub const INIT_GENERATOR: u64 = 1;
    pub const INIT_CRITIC: u64 = 2;
    pub const INIT_CLASSIFIER: u64 = 3;
    pub const TRAIN: u64 = 10;
    pub const NOISE: u64 = 11;
    pub const EVAL: u64 = 12;
    pub const SPLIT: u64 = 13;
    pub const GENERATE: u64 = 14;
}
