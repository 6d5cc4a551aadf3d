//! Reproducible random streams.
//!
//! Every random decision in the crate draws from [`ChaCha8Rng`] seeded with
//! `seed_from_u64`, so identical seeds give identical results on every
//! platform. Integer draws go through `u64` ranges to avoid depending on the
//! width of `usize`.

use rand::{Rng, SeedableRng};
pub use rand_chacha::ChaCha8Rng;

/// Fresh stream for `seed`.
pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Seed for sub-stream `index` of `base`.
///
/// SplitMix64 finaliser applied to `base + (index + 1) * 0x9E3779B97F4A7C15`
/// (wrapping), so neighbouring indices give unrelated seeds.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform index in `0..n`. `n` must be positive.
#[inline]
pub fn uniform_index<R: Rng + ?Sized>(rng: &mut R, n: usize) -> usize {
    debug_assert!(n > 0);
    rng.gen_range(0..n as u64) as usize
}

/// Uniform real in `[0, 1)`.
#[inline]
pub fn unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.gen::<f64>()
}
