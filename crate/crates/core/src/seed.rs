//! Run seeds and per-operation sub-seed derivation.
//!
//! A single 64-bit seed is fixed per run. Every stochastic operation derives
//! its own stream from `(run seed, operation name, invocation index)`, so the
//! result of one operation never depends on how many random draws another
//! operation consumed, or on the order in which parallel workers ran.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The RNG family used throughout the crate.
pub type Rng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct RunSeed(pub u64);

impl RunSeed {
    pub fn new(seed: u64) -> Self {
        Self(seed)
    }

    /// Derives an independent sub-seed for `op` at invocation `index`.
    pub fn derive(self, op: &str, index: u64) -> RunSeed {
        let mut h = splitmix64(self.0 ^ 0x5eed_0f_c1u64.rotate_left(17));
        for b in fnv1a(op.as_bytes()).to_le_bytes() {
            h = splitmix64(h ^ u64::from(b));
        }
        RunSeed(splitmix64(h ^ splitmix64(index)))
    }

    pub fn rng(self) -> Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    /// Shorthand for `derive(op, index).rng()`.
    pub fn rng_for(self, op: &str, index: u64) -> Rng {
        self.derive(op, index).rng()
    }
}

impl From<u64> for RunSeed {
    fn from(v: u64) -> Self {
        RunSeed(v)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}
