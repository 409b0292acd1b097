//! Deterministic randomness.
//!
//! All randomized operations draw from [`rand_chacha::ChaCha8Rng`] seeded
//! through [`RngSeed`]. ChaCha8 is a counter-based stream cipher whose
//! output is specified bit-for-bit, so the same seed yields the same stream
//! on every platform.
//!
//! Child streams (per series, per candidate, per epoch) are derived with
//! [`RngSeed::derive`]: `splitmix64(seed ^ splitmix64(index + 1))`. Work
//! split across threads by index therefore reproduces sequential results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(transparent)]
pub struct RngSeed(pub u64);

impl RngSeed {
    pub fn new(seed: u64) -> Self {
        RngSeed(seed)
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    /// Independent child seed for sub-stream `index`.
    pub fn derive(self, index: u64) -> RngSeed {
        RngSeed(splitmix64(self.0 ^ splitmix64(index.wrapping_add(1))))
    }
}

impl From<u64> for RngSeed {
    fn from(v: u64) -> Self {
        RngSeed(v)
    }
}

pub(crate) fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn same_seed_same_stream() {
        let a: Vec<u64> = (0..8).map(|_| 0).scan(RngSeed(7).rng(), |r, _| Some(r.random())).collect();
        let b: Vec<u64> = (0..8).map(|_| 0).scan(RngSeed(7).rng(), |r, _| Some(r.random())).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn derived_seeds_differ() {
        let s = RngSeed(42);
        assert_ne!(s.derive(0), s.derive(1));
        assert_ne!(s.derive(0), s);
        assert_eq!(s.derive(3), s.derive(3));
    }

    #[test]
    fn chacha8_stream_is_pinned() {
        // Guards against a silent change of generator algorithm.
        let mut r = RngSeed(0).rng();
        let first: u64 = r.random();
        let mut r2 = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(first, r2.random::<u64>());
    }
}
