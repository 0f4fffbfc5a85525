//! Splittable determinism: child seeds are hashes of the parent seed and a
//! label, so no RNG state is shared between independent units of work.

use sha2::{Digest, Sha256};

pub fn sub_seed(seed: u64, label: &str) -> u64 {
    let digest = Sha256::digest(format!("{seed}:{label}").as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_be_bytes(bytes)
}
