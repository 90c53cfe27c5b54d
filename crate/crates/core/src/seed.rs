//! Stable seed derivation and digests. Everything here is a pure function of
//! its inputs so replicas can run in any order on any number of threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

fn hash_words(tag: &[u8], words: &[u64]) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(tag);
    for w in words {
        h.update(w.to_le_bytes());
    }
    h.finalize().into()
}

fn first_u64(bytes: &[u8; 32]) -> u64 {
    u64::from_le_bytes(bytes[..8].try_into().expect("8 bytes"))
}

/// Seed of replica `index` under `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    first_u64(&hash_words(b"replica", &[master, index]))
}

/// Seed for the `attempt`-th resample of a degenerate draw.
pub fn sub_seed(seed: u64, attempt: u32) -> u64 {
    first_u64(&hash_words(b"resample", &[seed, attempt as u64]))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Short hex digest (16 hex digits) of a sequence of words.
pub fn digest(words: &[u64]) -> String {
    hash_words(b"subset", words)[..8].iter().map(|b| format!("{b:02x}")).collect()
}
