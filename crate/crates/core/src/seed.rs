//! Seed derivation for reproducible parallel trials.
//!
//! Trial `i` of a run with master seed `s` uses the generator
//! `ChaCha8Rng::seed_from_u64(derive_seed(s, i))`, where
//!
//! ```text
//! derive_seed(s, i) = splitmix64(s ^ splitmix64(i + 0x9E3779B97F4A7C15))
//! ```
//!
//! so serial and parallel runs see identical per-trial streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type TrialRng = ChaCha8Rng;

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index.wrapping_add(0x9E37_79B9_7F4A_7C15)))
}

pub fn trial_rng(master: u64, index: u64) -> TrialRng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, index))
}

pub fn rng_from_seed(seed: u64) -> TrialRng {
    ChaCha8Rng::seed_from_u64(seed)
}
