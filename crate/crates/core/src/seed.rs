//! Counter-based seed derivation.
//!
//! Every stochastic component draws from its own stream whose seed is a pure
//! function of the master seed and a path of integer labels. Adding a new
//! consumer never shifts the stream of an existing one.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream labels used across the crate.
pub mod role {
    pub const TEST_SPLIT: u64 = 1;
    pub const SEED_BATCH: u64 = 2;
    pub const TRAIN: u64 = 3;
    pub const ACQUIRE: u64 = 4;
    pub const VALIDATION_SPLIT: u64 = 5;
    pub const MEMBER: u64 = 6;
    pub const TREE: u64 = 7;
    pub const BADGE_TARGETS: u64 = 8;
    pub const SHUFFLE: u64 = 9;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from `master` and a label path.
pub fn derive(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(master), |acc, &label| splitmix64(acc ^ splitmix64(label)))
}

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn derived_rng(master: u64, path: &[u64]) -> Rng {
    rng(derive(master, path))
}
