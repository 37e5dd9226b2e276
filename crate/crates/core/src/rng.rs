//! Seed derivation for reproducible, order-independent parallel trials.
//!
//! Every trial owns its generators. Child seeds are produced with the
//! SplitMix64 finalizer so that `(parent, index)` pairs map to well-mixed,
//! platform-independent 64-bit seeds.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for stream `index` under `parent`.
pub fn derive_seed(parent: u64, index: u64) -> u64 {
    splitmix64(splitmix64(parent) ^ index.wrapping_mul(GOLDEN_GAMMA))
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent generator streams used inside one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Stream {
    City = 1,
    Landmarks = 2,
    Scenario = 3,
    Odometry = 4,
    Compass = 5,
    Detection = 6,
}

pub(crate) fn stream_seed(trial_seed: u64, stream: Stream) -> u64 {
    derive_seed(trial_seed, stream as u64)
}
