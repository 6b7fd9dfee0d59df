//! Hierarchical, reproducible random-number streams.
//!
//! Every stochastic component of the crate draws from an [`RngStream`]: a
//! 64-bit master seed plus a path of child indices (study -> replication ->
//! bootstrap replicate). Identical `(seed, path)` pairs always produce
//! identical draws, and distinct paths behave as independent streams, so
//! simulation results do not depend on worker count or scheduling.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const INIT_DOMAIN: u64 = 0x9d8b_f4a2_6c01_e375;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A node in the seed-derivation tree. Cheap to copy; use [`RngStream::child`]
/// to descend and [`RngStream::rng`] to materialize a generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    seed: u64,
    state: u64,
}

impl RngStream {
    /// Root stream for a master seed.
    pub fn new(seed: u64) -> Self {
        RngStream {
            seed,
            state: splitmix64(seed ^ INIT_DOMAIN),
        }
    }

    /// Derive the `index`-th child stream.
    pub fn child(&self, index: u64) -> Self {
        RngStream {
            seed: self.seed,
            state: splitmix64(self.state ^ splitmix64(index.wrapping_add(0x71c9))),
        }
    }

    /// The master seed this stream descends from.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Materialize a generator for this node. Repeated calls return
    /// identically-seeded generators.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        let mut s = self.state;
        for chunk in key.chunks_exact_mut(8) {
            s = splitmix64(s);
            chunk.copy_from_slice(&s.to_le_bytes());
        }
        ChaCha8Rng::from_seed(key)
    }
}
