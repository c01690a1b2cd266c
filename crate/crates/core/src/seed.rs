//! Seed derivation.
//!
//! Every random stream in the crate is a `ChaCha8Rng` seeded from a `u64`
//! obtained by mixing a parent seed with a path of integer labels. This keeps
//! results independent of evaluation order and of thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer.
#[inline]
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `parent` and a sequence of labels.
pub fn derive(parent: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix(parent), |acc, &label| splitmix(acc ^ splitmix(label)))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stream tags, so that sibling streams derived from one seed never coincide.
pub mod tag {
    pub const INIT_POPULATION: u64 = 1;
    pub const FITNESS: u64 = 2;
    pub const SELECTION: u64 = 3;
    pub const MUTATION: u64 = 4;
    pub const DROPOUT: u64 = 5;
    pub const HOLDOUT: u64 = 6;
    pub const SPLIT: u64 = 7;
    pub const EVOLVE: u64 = 8;
    pub const MODEL: u64 = 9;
    pub const BASELINE: u64 = 10;
}
