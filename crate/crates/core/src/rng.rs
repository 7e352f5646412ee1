//! Counter-based uniform draws.
//!
//! Draw `k` under master seed `m` is the SplitMix64 finalizer applied to
//! `m + (k + 1) * 0x9E3779B97F4A7C15` (wrapping). There is no state, so any
//! worker can compute any draw and the result never depends on scheduling.

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output mix.
#[inline]
pub fn splitmix64_finalize(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Raw 64-bit draw number `counter` under `master_seed`.
#[inline]
pub fn draw_u64(master_seed: u64, counter: u64) -> u64 {
    splitmix64_finalize(master_seed.wrapping_add(counter.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

/// Uniform in `[0, 1)`: the top 53 bits of the draw times 2^-53.
#[inline]
pub fn unit(master_seed: u64, counter: u64) -> f64 {
    (draw_u64(master_seed, counter) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform index in `0..len` by 64x64 multiply-high. `len` must be nonzero.
#[inline]
pub fn index(master_seed: u64, counter: u64, len: usize) -> usize {
    debug_assert!(len > 0);
    ((draw_u64(master_seed, counter) as u128 * len as u128) >> 64) as usize
}
