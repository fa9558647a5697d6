//! Seed plumbing.
//!
//! A run carries one global seed. Each consumer derives its own stream as
//! the first eight bytes (little-endian) of
//! `SHA-256("{global_seed}/{module}/{purpose}")`, so streams are independent
//! of each other and of the order in which they are requested.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// The RNG used everywhere in the crate. ChaCha output is stable across
/// platforms and crate versions, unlike `StdRng`.
pub type SeededRng = ChaCha8Rng;

pub fn derive_seed(global_seed: u64, module: &str, purpose: &str) -> u64 {
    let digest = Sha256::digest(format!("{global_seed}/{module}/{purpose}").as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

pub fn rng_from_seed(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn derive_rng(global_seed: u64, module: &str, purpose: &str) -> SeededRng {
    rng_from_seed(derive_seed(global_seed, module, purpose))
}
