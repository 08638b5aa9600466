//! Seeded random streams.
//!
//! Every random decision in the pipeline draws from a stream derived from the
//! global seed plus a stable key (sample id, augmentation index), so results
//! do not depend on scheduling order or worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type StreamRng = ChaCha8Rng;

/// Independent stream for `(seed, key, index)`.
pub fn stream_rng(seed: u64, key: &str, index: u64) -> StreamRng {
    let mut hasher = Sha256::new();
    hasher.update(b"maskfill-stream-v1");
    hasher.update(seed.to_le_bytes());
    hasher.update((key.len() as u64).to_le_bytes());
    hasher.update(key.as_bytes());
    hasher.update(index.to_le_bytes());
    StreamRng::from_seed(hasher.finalize().into())
}

pub fn seeded(seed: u64) -> StreamRng {
    StreamRng::seed_from_u64(seed)
}
