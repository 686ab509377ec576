//! Deterministic, seedable randomness.
//!
//! All random draws in this crate go through [`RandomSource`], which wraps the
//! ChaCha stream cipher (8 rounds, IETF variant) in counter mode as implemented
//! by the `rand_chacha` crate. The generator is fully specified: the same seed
//! produces the same bit sequence on every platform and every run. Floating
//! point values are derived from the raw 64-bit output with explicit integer
//! arithmetic, so draws are bit-identical everywhere.
//!
//! Sub-streams: ChaCha keys a 64-bit stream number in addition to the seed, and
//! distinct stream numbers yield non-overlapping output sequences. Stream
//! numbers are derived from string labels with FNV-1a (64-bit), chained through
//! the parent's stream number, so `src.substream("a")` and `src.substream("b")`
//! never collide in practice and are independent of how much the parent has
//! already drawn.

use rand_chacha::ChaCha8Rng;
use rand_core::{Rng, SeedableRng};

use crate::error::{Error, Result};

const FNV_OFFSET: u64 = 0xcbf29ce484222325;
const FNV_PRIME: u64 = 0x00000100000001b3;

fn fnv1a64(init: u64, bytes: &[u8]) -> u64 {
    let mut h = init;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// Deterministic random number source. Single-owner: drawing advances the
/// stream, so concurrent users must each hold their own source (usually a
/// sub-stream).
#[derive(Debug, Clone)]
pub struct RandomSource {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RandomSource {
    /// Root source for a 64-bit seed (stream number 0).
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    fn with_stream(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    /// The seed this source (and all of its sub-streams) was created from.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Derive an independent source from `(seed, label)`. The child starts at
    /// the beginning of its own stream regardless of the parent's position.
    pub fn substream(&self, label: &str) -> Self {
        let mut h = fnv1a64(FNV_OFFSET, &self.stream.to_be_bytes());
        h = fnv1a64(h, label.as_bytes());
        Self::with_stream(self.seed, h)
    }

    /// Next raw 64-bit word.
    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform draw in `[0, 1)` with 53 bits of precision.
    pub fn uniform_01(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in `[lo, hi)`.
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform_01()
    }

    /// Standard normal draw via Box-Muller.
    pub fn standard_normal(&mut self) -> f64 {
        let u1 = self.uniform_01().max(f64::MIN_POSITIVE);
        let u2 = self.uniform_01();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}

/// Draw `count` uniform values in `[lo, hi)`.
pub fn draw_uniform(rng: &mut RandomSource, lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
        return Err(Error::InvalidParameter(format!(
            "uniform bounds must satisfy lo < hi, got [{lo}, {hi})"
        )));
    }
    if count == 0 {
        return Err(Error::InvalidParameter("count must be >= 1".into()));
    }
    Ok((0..count).map(|_| rng.uniform_in(lo, hi)).collect())
}
