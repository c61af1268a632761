//! Seeded randomness and the fixed 64-bit mix function used for bucket
//! hashing and fold assignment.
//!
//! Everything that consumes entropy in this crate goes through
//! [`seeded_rng`] (ChaCha8, stable across platforms and crate versions) or
//! [`mix64`] (SplitMix64 finalizer, public constants below), so identical
//! seeds reproduce identical outputs everywhere.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer. Constants are the published ones from Steele,
/// Lea & Flood's SplitMix generator; this is a bijective avalanche mix
/// on 64 bits.
#[inline]
pub fn mix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Combine a seed with a stream label into a new 64-bit seed.
#[inline]
pub fn mix2(seed: u64, stream: u64) -> u64 {
    mix64(seed ^ mix64(stream))
}

/// Deterministic RNG for a given seed.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
