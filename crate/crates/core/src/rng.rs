//! Seeded random streams. ChaCha is counter-based: each (seed, stream)
//! pair gives an independent sequence, so work can be split across
//! samples, pillars or threads without changing any result.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn stream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Seed for a derived sub-task, e.g. sample `index` of a dataset.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    use rand::RngCore;
    stream(seed, index.wrapping_add(1 << 32)).next_u64()
}
