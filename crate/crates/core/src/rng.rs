//! Reproducible random streams.
//!
//! Each trajectory owns a [`Stream`]: a ChaCha8 generator whose 64-bit seed
//! is derived from a master seed and the trajectory index by one SplitMix64
//! output step,
//!
//! ```text
//! seed_i = mix(master + (i + 1) · 0x9E3779B97F4A7C15)
//! ```
//!
//! so streams are independent of scheduling order.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finaliser.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of stream `index` under `master`.
pub fn stream_seed(master: u64, index: u64) -> u64 {
    mix64(master.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN)))
}

/// A uniform random stream on `[0, 1)`.
#[derive(Clone, Debug)]
pub struct Stream {
    rng: ChaCha8Rng,
}

impl Stream {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// Stream `index` derived from `master`.
    pub fn derived(master: u64, index: u64) -> Self {
        Self::new(stream_seed(master, index))
    }

    /// Uniform draw in `[0, 1)` with 53 random bits.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in `(0, 1]`.
    #[inline]
    pub fn uniform_open_low(&mut self) -> f64 {
        1.0 - self.uniform()
    }

    /// Exponential variate with the given rate.
    pub fn exponential(&mut self, rate: f64) -> f64 {
        -crate::math::ln(self.uniform_open_low()) / rate
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }
}
