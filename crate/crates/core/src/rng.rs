//! Seeded randomness. Every sampler and generator draws from ChaCha8, whose
//! output stream is fixed across platforms; independent trials use
//! separate streams of the same key.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for stream `stream` of the key derived from `seed`.
pub fn stream(seed: u64, stream: u64) -> Rng {
    let mut rng = seeded(seed);
    rng.set_stream(stream);
    rng
}

/// A fresh 64-bit seed for trial `trial` under master seed `seed`.
pub fn derive_seed(seed: u64, trial: u64) -> u64 {
    stream(seed, trial).next_u64()
}
