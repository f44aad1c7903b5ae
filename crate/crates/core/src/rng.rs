//! Seed derivation and the generator used by every sampler.
//!
//! All randomness flows through [`SplitMix64`] (from `rand_xoshiro`): a
//! counter-based generator with 64 bits of state whose k-th output is the
//! splitmix finalizer applied to `seed + k * 0x9E3779B97F4A7C15`. Normal draws
//! use `rand_distr::StandardNormal`. Changing either is a breaking change for
//! every stored baseline.

use rand::SeedableRng;
pub use rand_xoshiro::SplitMix64;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// The splitmix64 output finalizer (Stafford variant 13).
#[inline]
pub fn finalize(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent child seed from a parent seed and a stream index.
/// Order-independent: the child depends only on `(seed, index)`.
#[inline]
pub fn mix(seed: u64, index: u64) -> u64 {
    finalize(seed.wrapping_add(GOLDEN_GAMMA.wrapping_mul(index.wrapping_add(1))) ^ finalize(index))
}

/// Folds a path of indices into a seed, e.g. `derive(master, &[n, replica])`.
pub fn derive(seed: u64, path: &[u64]) -> u64 {
    path.iter().fold(seed, |s, &i| mix(s, i))
}

pub fn generator(seed: u64) -> SplitMix64 {
    SplitMix64::seed_from_u64(seed)
}
