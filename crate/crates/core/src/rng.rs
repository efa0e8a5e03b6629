//! Deterministic per-trial random streams.
//!
//! Every stream is a ChaCha8 generator seeded from
//! `mix(seed, trial, tag)`, where `mix` folds the three words through the
//! SplitMix64 finalizer:
//!
//! ```text
//! z = seed
//! z = splitmix(z ^ splitmix(trial + 0x9E3779B97F4A7C15))
//! z = splitmix(z ^ splitmix(tag  + 0xBF58476D1CE4E5B9))
//! ```
//!
//! so an alternate implementation can reproduce any trial of any
//! experiment from the reported seed alone.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Module tags used when deriving streams.
pub mod tag {
    pub const SAMPLE: u64 = 1;
    pub const PAIRS: u64 = 2;
    pub const CENTERS: u64 = 3;
    pub const CHI: u64 = 4;
    pub const WALK: u64 = 5;
    pub const IMPORTANCE: u64 = 6;
    pub const STABLE: u64 = 7;
}

#[inline]
pub fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn mix(seed: u64, trial: u64, tag: u64) -> u64 {
    let mut z = seed;
    z = splitmix(z ^ splitmix(trial.wrapping_add(0x9E37_79B9_7F4A_7C15)));
    splitmix(z ^ splitmix(tag.wrapping_add(0xBF58_476D_1CE4_E5B9)))
}

pub fn stream(seed: u64, trial: u64, tag: u64) -> Rng {
    Rng::seed_from_u64(mix(seed, trial, tag))
}

pub fn from_seed(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}
