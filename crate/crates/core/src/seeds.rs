//! Deterministic sub-seed derivation. Every stochastic component takes a
//! master seed plus an index path (e.g. `[ratio_idx, replicate_idx]`) so that
//! replicates and per-item cascades draw from independent, reproducible
//! streams.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Mix a master seed with an index path into a single stream key.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    let mut s = splitmix64(master);
    for &p in path {
        s = splitmix64(s ^ splitmix64(p));
    }
    s
}

/// RNG for the stream identified by `(master, path)`.
pub fn rng_for(master: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, path))
}
