//! Seed derivation for independent, schedule-independent random streams.
//!
//! Every stream is keyed by `(master_seed, trial_index, purpose, lane)` and
//! mixed with SplitMix64 finalizers, so a trial's draws do not depend on which
//! worker runs it or on how many other streams were consumed before it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// What a random stream is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    Delay = 1,
    Signal = 2,
    Channel = 3,
    Noise = 4,
    /// Noise samples at negative stream indices (before the frame starts).
    LeadingNoise = 5,
    PdpError = 6,
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for trial `trial` under `master`.
pub fn trial_seed(master: u64, trial: u64) -> u64 {
    splitmix64(splitmix64(master) ^ trial.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

/// Seed for one purpose/lane (e.g. antenna index) under a trial seed.
pub fn stream_seed(trial_seed: u64, purpose: Purpose, lane: u64) -> u64 {
    let tagged = splitmix64(trial_seed ^ (purpose as u64).wrapping_mul(0xA076_1D64_78BD_642F));
    splitmix64(tagged ^ lane.wrapping_mul(0xE703_7ED1_A0B4_28DB))
}

pub fn stream(trial_seed: u64, purpose: Purpose, lane: u64) -> StreamRng {
    StreamRng::seed_from_u64(stream_seed(trial_seed, purpose, lane))
}
