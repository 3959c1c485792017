//! Seeding conventions.
//!
//! Every random stream in the crate is a `ChaCha8Rng` built with
//! `SeedableRng::seed_from_u64`. Per-trial seeds in sweeps are derived with
//! [`trial_seed`], a SplitMix64 fold over `(base_seed, n, r_num, r_den, trial)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for one sweep trial. The density enters as a reduced fraction so that
/// the same grid point always maps to the same instance, whatever else is on
/// the grid.
pub fn trial_seed(base_seed: u64, n: u64, r_num: u64, r_den: u64, trial: u64) -> u64 {
    [n, r_num, r_den, trial]
        .into_iter()
        .fold(splitmix64(base_seed), |h, w| splitmix64(h ^ w))
}
