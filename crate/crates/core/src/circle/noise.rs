//! Counter-based noise: the `i`-th draw is a pure function of `(seed, i)`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform `[0, 1)` variate at position `index` of stream `seed`.
#[inline]
pub fn unit(seed: u64, index: u64) -> f64 {
    let key = mix64(seed ^ 0x5851_F42D_4C95_7F2D);
    let h = mix64(key.wrapping_add(index.wrapping_add(1).wrapping_mul(GAMMA)));
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Independent sub-stream seed derived from `seed` and a tag.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    mix64(mix64(seed).wrapping_add(tag.wrapping_mul(GAMMA) ^ 0xD6E8_FEB8_6659_FD93))
}

/// The noise sequence `ω = (ω_0, ω_1, …)` with `ω_i` uniform on `[-σ, σ]`,
/// viewed from an offset so that `shifted(k)` realises the shift `θ^k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseStream {
    sigma: f64,
    seed: u64,
    offset: u64,
}

impl NoiseStream {
    pub fn new(sigma: f64, seed: u64) -> Result<Self> {
        if !(0.0..=0.5).contains(&sigma) {
            return invalid(format!("sigma = {sigma} must lie in [0, 1/2]"));
        }
        Ok(NoiseStream { sigma, seed, offset: 0 })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn offset(&self) -> u64 {
        self.offset
    }

    /// `ω_i` of the (shifted) sequence.
    #[inline]
    pub fn draw(&self, i: usize) -> f64 {
        self.sigma * (2.0 * unit(self.seed, self.offset + i as u64) - 1.0)
    }

    /// The shifted sequence `θ^k ω`.
    pub fn shifted(&self, k: usize) -> Self {
        NoiseStream { offset: self.offset + k as u64, ..*self }
    }

    pub fn prefix(&self, n: usize) -> Vec<f64> {
        (0..n).map(|i| self.draw(i)).collect()
    }
}
