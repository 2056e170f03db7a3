//! Seeded randomness. Every random draw in the crate comes from a ChaCha8
//! stream keyed by a user seed, so results never depend on evaluation order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::Vector;

/// The generator behind every seeded draw.
pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `index` under `seed`; used for per-sample draws.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn standard_normal(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    StandardNormal.sample_iter(rng).take(len).collect()
}

/// A standard-normal latent code of dimension `dim`.
pub fn latent(rng: &mut ChaCha8Rng, dim: usize) -> Vector {
    Vector::new(standard_normal(rng, dim)).expect("normal samples are finite")
}
