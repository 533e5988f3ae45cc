//! Deterministic seed derivation.
//!
//! All randomness flows from `ChaCha8Rng::seed_from_u64`. Child seeds are
//! derived by folding each key into the parent with the SplitMix64
//! finaliser: `s ← mix(s ⊕ mix(key + i·φ))` for the `i`-th key, where `φ` is
//! the 64-bit golden-ratio constant. The mapping is fixed and platform
//! independent.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(base: u64, keys: &[u64]) -> u64 {
    keys.iter().enumerate().fold(mix(base), |acc, (i, &k)| {
        mix(acc ^ mix(k.wrapping_add((i as u64 + 1).wrapping_mul(GOLDEN))))
    })
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
