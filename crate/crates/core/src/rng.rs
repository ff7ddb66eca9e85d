//! Counter-based random streams.
//!
//! A [`Stream`] is identified by `(master seed, estimator id, replica)`. Every
//! uniform it hands out is a pure function of the stream and an item key (an
//! edge key, a vertex key, a step counter), so the same edge receives the same
//! label at every `p` of a sweep and on every worker thread.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finaliser.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Order-dependent combination of two keys.
#[inline]
pub fn combine(a: u64, b: u64) -> u64 {
    mix64(a ^ mix64(b).rotate_left(17))
}

/// Maps the top 53 bits of a word to `[0, 1)`.
#[inline]
pub fn unit_f64(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct Stream {
    pub master: u64,
    pub estimator: u64,
    pub replica: u64,
}

impl Stream {
    pub fn new(master: u64, estimator: u64, replica: u64) -> Self {
        Stream { master, estimator, replica }
    }

    pub fn key(&self) -> u64 {
        combine(combine(mix64(self.master), self.estimator), self.replica)
    }

    /// The uniform attached to `item` in this stream.
    #[inline]
    pub fn uniform(&self, item: u64) -> f64 {
        unit_f64(combine(self.key(), item))
    }

    /// Sequential generator for consumers that need a run of draws (walkers,
    /// samplers of random vertices).
    pub fn sequential(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.key())
    }
}

/// Precomputed stream key, for hot loops.
#[derive(Debug, Clone, Copy)]
pub struct Keyed(u64);

impl Keyed {
    #[inline]
    pub fn uniform(&self, item: u64) -> f64 {
        unit_f64(combine(self.0, item))
    }
}

impl From<Stream> for Keyed {
    fn from(s: Stream) -> Self {
        Keyed(s.key())
    }
}

/// Stable estimator identifiers; these feed stream derivation and must never be
/// renumbered.
pub mod ids {
    pub const BOND_LABELS: u64 = 1;
    pub const SITE_LABELS: u64 = 2;
    pub const FOREST_LABELS: u64 = 3;
    pub const WALKERS: u64 = 4;
    pub const SAMPLER: u64 = 5;
    pub const HYPERFINITE: u64 = 6;
    pub const REFINE: u64 = 7;
}
