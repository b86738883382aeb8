//! Seed derivation: one root seed fans out to every randomized stage.
//!
//! The derivation rule is `u64::from_le_bytes(sha256(root_le || ":" || domain)[..8])`.
//! Domains are path-like strings, e.g. `"sim/nitrate-noise"` or `"train/shuffle"`.
//! Changing an unrelated stage's draw count therefore never shifts another
//! stage's stream.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Deterministic per-domain seed derived from the root seed.
pub fn derive_seed(root: u64, domain: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(root.to_le_bytes());
    hasher.update(b":");
    hasher.update(domain.as_bytes());
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

/// RNG used throughout the crate; the concrete algorithm is pinned so that
/// identical seeds reproduce identical streams across builds.
pub type Rng = ChaCha8Rng;

/// New RNG for `domain`, seeded from the root seed.
pub fn rng_for(root: u64, domain: &str) -> Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(root, domain))
}
