//! Seed derivation.
//!
//! A single master seed fans out into independent substreams. The seed for
//! a `(label, key)` pair is the first eight bytes (little endian) of
//! `SHA-256(master_le_bytes || label || 0x00 || key)`. Labels name the
//! consumer (`"simulation"`, `"init"`, `"shuffle"`, `"strategy"`, `"sweep"`),
//! keys name the unit of work (a learner id, a fold, a sweep cell).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type Rng = ChaCha8Rng;

pub fn derive_seed(master: u64, label: &str, key: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(label.as_bytes());
    h.update([0u8]);
    h.update(key.as_bytes());
    let digest = h.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

pub fn rng_from_seed(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

pub fn derive_rng(master: u64, label: &str, key: &str) -> Rng {
    rng_from_seed(derive_seed(master, label, key))
}

/// Hex SHA-256 of a byte string; used for dataset and file fingerprints.
pub fn digest_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
