//! Seed derivation.
//!
//! Every random stream in the crate is a ChaCha8 generator seeded from
//! `mix(master, path)`, where `path` names the stream (cell, replicate,
//! attempt, purpose tag). Streams are therefore fixed before any task runs
//! and no result depends on execution order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Stream purpose tags, mixed into seed paths.
pub mod tag {
    pub const THETA: u64 = 0x7468_6574_61;
    pub const DATA: u64 = 0x6461_7461;
    pub const TEST: u64 = 0x7465_7374;
    pub const COIN: u64 = 0x636f_696e;
    pub const MOMENTS: u64 = 0x6d6f_6d65_6e74;
}

#[inline]
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `master` and a path of indices.
pub fn mix(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(master), |acc, &p| {
        splitmix64(acc ^ splitmix64(p.wrapping_mul(0xD6E8_FEB8_6659_FD93)))
    })
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

pub fn rng_for(master: u64, path: &[u64]) -> SimRng {
    rng_from_seed(mix(master, path))
}
