//! Deterministic seed derivation.
//!
//! Every random draw in the pipeline comes from a stream derived from the
//! root seed, a purpose label, and an index (timestep, epoch, attempt).
//! Streams are independent and stable across platforms, so parallel and
//! serial execution, or regeneration of a single timestep, produce
//! identical draws.

use rand_chacha::ChaCha12Rng;
use rand_chacha::rand_core::SeedableRng;
use sha2::{Digest, Sha256};

pub fn derive_seed(root: u64, purpose: &str, index: u64) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(root.to_le_bytes());
    hasher.update([0u8]);
    hasher.update(purpose.as_bytes());
    hasher.update([0u8]);
    hasher.update(index.to_le_bytes());
    hasher.finalize().into()
}

/// An RNG stream for (root, purpose, index).
pub fn stream(root: u64, purpose: &str, index: u64) -> ChaCha12Rng {
    ChaCha12Rng::from_seed(derive_seed(root, purpose, index))
}
