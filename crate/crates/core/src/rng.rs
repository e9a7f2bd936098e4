//! Deterministic, splittable pseudo-randomness.
//!
//! Every generation stage draws from its own [`RandomStream`], derived from the
//! world seed and a short ASCII [`StreamLabel`]. The algorithm is fixed so that
//! ports in other languages agree bit-for-bit:
//!
//! 1. `key = splitmix64_mix(seed) ^ fnv1a64(label)`
//! 2. The four xoshiro256++ state words are the first four SplitMix64 outputs
//!    starting from state `key`.
//! 3. Draws come from xoshiro256++ (Blackman & Vigna).
//!
//! Derived draws (`next_f64`, `below`, `chance`, ...) consume raw `u64`s in the
//! order documented on each method. See `docs/rng.md` for test vectors.

use std::fmt;

use rand_xoshiro::rand_core::{Rng, SeedableRng};
use rand_xoshiro::{SplitMix64, Xoshiro256PlusPlus};
use serde::{Deserialize, Serialize};

use crate::error::RngError;

/// The single source of randomness for a world.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WorldSeed(pub u64);

impl WorldSeed {
    /// Parses a seed written either in decimal or as `0x`-prefixed hex.
    pub fn parse(text: &str) -> Result<Self, RngError> {
        let text = text.trim();
        let parsed = if let Some(hex) = text.strip_prefix("0x").or_else(|| text.strip_prefix("0X")) {
            u64::from_str_radix(hex, 16)
        } else {
            text.parse::<u64>()
        };
        parsed
            .map(WorldSeed)
            .map_err(|_| RngError::InvalidSeed(text.to_string()))
    }
}

impl fmt::Display for WorldSeed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::str::FromStr for WorldSeed {
    type Err = RngError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        WorldSeed::parse(s)
    }
}

pub const MAX_LABEL_LEN: usize = 64;

/// Name of a generation stage, e.g. `"village.sim"`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct StreamLabel(String);

impl StreamLabel {
    pub fn new(label: impl Into<String>) -> Result<Self, RngError> {
        let label = label.into();
        if label.is_empty() || label.len() > MAX_LABEL_LEN || !label.is_ascii() {
            return Err(RngError::InvalidLabel(label));
        }
        Ok(StreamLabel(label))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

/// Derives the stream for `(seed, label)`. Same inputs always give the same sequence.
pub fn derive_stream(seed: WorldSeed, label: &StreamLabel) -> RandomStream {
    let key = splitmix64_mix(seed.0) ^ fnv1a64(label.as_str().as_bytes());
    RandomStream::from_key(key)
}

/// Convenience for internal stage labels that are known to be valid.
pub(crate) fn stage(seed: WorldSeed, label: &str) -> RandomStream {
    let label = StreamLabel::new(label).expect("internal stage labels are valid");
    derive_stream(seed, &label)
}

/// xoshiro256++ generator. Single owner; never shared between stages.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RandomStream {
    inner: Xoshiro256PlusPlus,
}

impl RandomStream {
    /// Seeds the generator state from a 64-bit key with SplitMix64.
    pub fn from_key(key: u64) -> Self {
        let mut sm = SplitMix64::seed_from_u64(key);
        RandomStream::from_state([sm.next_u64(), sm.next_u64(), sm.next_u64(), sm.next_u64()])
    }

    /// Raw state constructor, used for reference test vectors.
    pub fn from_state(s: [u64; 4]) -> Self {
        let mut bytes = [0u8; 32];
        for (chunk, word) in bytes.chunks_exact_mut(8).zip(s) {
            chunk.copy_from_slice(&word.to_le_bytes());
        }
        RandomStream { inner: Xoshiro256PlusPlus::from_seed(bytes) }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)`: top 53 bits of one `u64`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, n)` by rejection sampling; may consume several `u64`s.
    /// Panics if `n == 0`.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        let threshold = n.wrapping_neg() % n;
        loop {
            let r = self.next_u64();
            if r >= threshold {
                return r % n;
            }
        }
    }

    /// Uniform index into a slice of length `len`.
    pub fn index(&mut self, len: usize) -> usize {
        self.below(len as u64) as usize
    }

    /// Uniform integer in `[lo, hi]` (inclusive).
    pub fn range_i64(&mut self, lo: i64, hi: i64) -> i64 {
        assert!(lo <= hi, "range_i64: {lo} > {hi}");
        let span = (hi - lo) as u64 + 1;
        lo + self.below(span) as i64
    }

    pub fn range_u32(&mut self, lo: u32, hi: u32) -> u32 {
        self.range_i64(lo as i64, hi as i64) as u32
    }

    /// Uniform real in `[lo, hi)`; one `u64`.
    pub fn range_f64(&mut self, lo: f64, hi: f64) -> f64 {
        lo + self.next_f64() * (hi - lo)
    }

    /// Bernoulli trial. Always consumes exactly one `u64`, even for p <= 0 or p >= 1.
    pub fn chance(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }

    /// Rounds `x >= 0` to an integer whose expectation is `x`; one `u64`.
    pub fn stochastic_round(&mut self, x: f64) -> u64 {
        let x = x.max(0.0);
        let floor = x.floor();
        let frac = x - floor;
        floor as u64 + u64::from(self.chance(frac))
    }

    pub fn pick<'a, T>(&mut self, items: &'a [T]) -> &'a T {
        &items[self.index(items.len())]
    }

    /// Fisher-Yates from the back: for i = n-1 down to 1, swap i with below(i + 1).
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }

    /// Weighted choice over non-negative weights; one `u64`. Returns `None` when all weights are zero.
    pub fn weighted_index(&mut self, weights: &[f64]) -> Option<usize> {
        let total: f64 = weights.iter().copied().filter(|w| *w > 0.0).sum();
        let roll = self.next_f64() * total;
        if total <= 0.0 {
            return None;
        }
        let mut acc = 0.0;
        let mut last = None;
        for (i, w) in weights.iter().enumerate() {
            if *w <= 0.0 {
                continue;
            }
            acc += w;
            last = Some(i);
            if roll < acc {
                return Some(i);
            }
        }
        last
    }
}

pub fn splitmix64_mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0100_0000_01b3);
    }
    hash
}
