//! Counter-based random streams.
//!
//! Draw `k` of a stream is a pure function of `(key, k)`: the SplitMix64
//! output at position `k`. Any batching or thread schedule yields the same
//! numbers.

use crate::stats::normal_quantile;

const GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut x: u64) -> u64 {
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Seed of replicate `r` in a Monte Carlo run keyed by `seed`.
pub fn replicate_seed(seed: u64, r: u64) -> u64 {
    seed ^ mix64(r.wrapping_add(1).wrapping_mul(GAMMA) ^ 0x5851_f42d_4c95_7f2d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterRng {
    key: u64,
}

impl CounterRng {
    pub fn new(key: u64) -> Self {
        CounterRng { key }
    }

    pub fn bits(&self, counter: u64) -> u64 {
        mix64(self.key.wrapping_add(counter.wrapping_add(1).wrapping_mul(GAMMA)))
    }

    /// Uniform on the open interval (0, 1), 53 bits of resolution.
    pub fn uniform(&self, counter: u64) -> f64 {
        ((self.bits(counter) >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal by inverse CDF.
    pub fn normal(&self, counter: u64) -> f64 {
        normal_quantile(self.uniform(counter))
    }
}
