//! Deterministic seed derivation.
//!
//! Every randomized routine derives its RNG from a base seed mixed with a
//! stream key (a coalition mask, a permutation index or a stage name), so
//! results never depend on evaluation order or thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `seed` and an integer stream key.
pub fn derive(seed: u64, key: u64) -> u64 {
    mix64(seed ^ mix64(key.wrapping_add(0x6A09_E667_F3BC_C909)))
}

/// Derives a child seed from `seed` and a stage name (FNV-1a over the bytes).
pub fn derive_named(seed: u64, name: &str) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for b in name.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    derive(seed, h)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn stream(seed: u64, key: u64) -> ChaCha8Rng {
    rng(derive(seed, key))
}
