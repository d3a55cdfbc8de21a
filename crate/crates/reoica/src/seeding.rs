//! Seed derivation for reproducible component RNG streams.
//!
//! Every randomized component of a run (sources, mixing, noise, reservoir,
//! FastICA init) draws from its own stream derived from
//! `(master_seed, run_seed, component tag)`, so each component is
//! independently reproducible and methods sharing a seed see identical data.

use sha2::{Digest, Sha256};

/// Derive a 64-bit seed from a base seed and a component tag.
pub fn derive_seed(base: u64, tag: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(base.to_le_bytes());
    hasher.update(tag.as_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest is long enough"))
}

/// Derive a component stream seed for one run.
pub fn component_seed(master_seed: u64, run_seed: u64, tag: &str) -> u64 {
    derive_seed(derive_seed(master_seed, &format!("run/{run_seed}")), tag)
}
