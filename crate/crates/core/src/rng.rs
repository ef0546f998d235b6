//! Seeded random streams.
//!
//! All randomness is derived from a single user seed. Subsystems take
//! independent streams keyed by a fixed label so adding a consumer never
//! perturbs another one.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

// FNV-1a, 64 bit.
pub(crate) fn fnv1a(bytes: impl IntoIterator<Item = u8>, seed: u64) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325 ^ seed;
    for b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// A reproducible stream for `label` under `seed`.
pub fn stream(seed: u64, label: &str) -> StreamRng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&fnv1a(label.bytes(), 0).to_le_bytes());
    key[16..24].copy_from_slice(&fnv1a(label.bytes(), seed).to_le_bytes());
    ChaCha8Rng::from_seed(key)
}
