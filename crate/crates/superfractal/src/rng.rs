//! The single RNG used across the crate: ChaCha8 seeded from a 64-bit seed.
//! Every randomized operation takes an explicit seed; parallel work derives
//! numbered substreams so results never depend on thread count.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;

pub type ArtifactRng = rand_chacha::ChaCha8Rng;

pub fn from_seed(seed: u64) -> ArtifactRng {
    ArtifactRng::seed_from_u64(seed)
}

/// Seed of independent stream `index` derived from `seed` (splitmix64 mix).
pub fn substream_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn substream(seed: u64, index: u64) -> ArtifactRng {
    ArtifactRng::seed_from_u64(substream_seed(seed, index))
}

/// Draws an index in `0..probs.len()` with the given law (inverse CDF walk).
/// Hand-rolled so the byte stream consumed per draw is fixed forever.
pub fn draw_index(rng: &mut ArtifactRng, probs: &[f64]) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Uniform draw in `0..n`.
pub fn draw_uniform(rng: &mut ArtifactRng, n: usize) -> usize {
    let u: f64 = rng.gen();
    ((u * n as f64) as usize).min(n - 1)
}
