//! Deterministic seed derivation.
//!
//! A run is driven by one master seed. Components (topology, workload,
//! algorithm) each get a sub-seed derived from the master seed and a label,
//! so any one of them can be varied independently without perturbing the
//! others.

use sha2::{Digest, Sha256};

/// Derive a labeled sub-seed from a master seed.
pub fn sub_seed(master: u64, label: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(label.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().unwrap())
}
