//! Portable seed derivation.
//!
//! Every random stream in the crate is a ChaCha8 generator seeded from a
//! 64-bit value. Composite seeds (master seed plus grid indices, or graph
//! seed plus attempt number) are folded together with the SplitMix64
//! finalizer:
//!
//! ```text
//! h = 0x9E3779B97F4A7C15
//! for each part p:  h = splitmix64(h ^ p)
//! splitmix64(z): z += 0x9E3779B97F4A7C15
//!                z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//!                z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//!                z ^ (z >> 31)
//! ```
//!
//! The generator is then `ChaCha8Rng::seed_from_u64(h)`, which is stable
//! across platforms and releases of `rand_chacha`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a sequence of integers into one seed.
pub fn mix(parts: &[u64]) -> u64 {
    parts.iter().fold(GOLDEN, |h, &p| splitmix64(h ^ p))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
