//! Seeded, splittable random streams.
//!
//! Every random object is drawn from a ChaCha8 stream whose key is derived
//! from `(master seed, tag)` and whose stream id is an index (column, trial,
//! round). Results therefore depend only on the seed, never on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type StreamRng = ChaCha8Rng;

/// A keyed family of independent streams.
#[derive(Debug, Clone)]
pub struct StreamFamily {
    base: ChaCha8Rng,
}

impl StreamFamily {
    pub fn new(seed: u64, tag: &str) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(seed.to_le_bytes());
        hasher.update((tag.len() as u64).to_le_bytes());
        hasher.update(tag.as_bytes());
        let key: [u8; 32] = hasher.finalize().into();
        StreamFamily { base: ChaCha8Rng::from_seed(key) }
    }

    pub fn stream(&self, index: u64) -> StreamRng {
        let mut rng = self.base.clone();
        rng.set_stream(index);
        rng
    }
}

pub fn stream(seed: u64, tag: &str, index: u64) -> StreamRng {
    StreamFamily::new(seed, tag).stream(index)
}

/// Derives a child seed, e.g. the seed of trial `index` of an experiment.
pub fn derive_seed(seed: u64, tag: &str, index: u64) -> u64 {
    use rand::RngCore;
    stream(seed, tag, index).next_u64()
}
