//! Seed derivation for reproducible, schedule-independent resampling.
//!
//! Every resample (or Monte Carlo trial) draws from its own generator whose
//! seed is a function of `(seed, index)` only, so results do not depend on
//! how work is split across threads.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Default seed when neither a flag nor `SIGKIT_SEED` provides one.
pub const DEFAULT_SEED: u64 = 0x5EED_5EED_5EED_5EED;

pub type StreamRng = Xoshiro256PlusPlus;

/// The splitmix64 finalizer.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a parent seed with a child index into a new 64-bit seed.
#[inline]
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index.wrapping_mul(GOLDEN_GAMMA) ^ 0xD1B5_4A32_D192_ED03))
}

/// Generator for stream `index` under `seed`.
#[inline]
pub fn stream(seed: u64, index: u64) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(seed, index))
}
