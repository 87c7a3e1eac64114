//! Seed derivation.
//!
//! Every episode owns three independent ChaCha8 streams (rewards, drift,
//! contexts) so that changing one model, for example forcing the drift to
//! zero, leaves the other draws untouched.
//!
//! Derivation, stated for re-implementations:
//! - `mix(z)` is the SplitMix64 finalizer applied to `z + 0x9E3779B97F4A7C15`.
//! - trial seed = `mix(mix(master_seed) ^ trial_index)`.
//! - stream seed = `mix(episode_seed ^ mix(stream_id))` with stream ids
//!   reward = 1, drift = 2, context = 3, fed to `ChaCha8Rng::seed_from_u64`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 step: advance by the golden gamma, then finalize.
pub fn mix(z: u64) -> u64 {
    let mut z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-trial episode seed derived from the experiment's master seed.
pub fn trial_seed(master_seed: u64, trial_index: u64) -> u64 {
    mix(mix(master_seed) ^ trial_index)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    Reward = 1,
    Drift = 2,
    Context = 3,
}

pub fn stream_rng(episode_seed: u64, stream: Stream) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(episode_seed ^ mix(stream as u64)))
}

/// The random sources consumed by one episode.
#[derive(Clone, Debug)]
pub struct EpisodeRng {
    pub reward: ChaCha8Rng,
    pub drift: ChaCha8Rng,
    pub context: ChaCha8Rng,
}

impl EpisodeRng {
    pub fn new(episode_seed: u64) -> Self {
        Self {
            reward: stream_rng(episode_seed, Stream::Reward),
            drift: stream_rng(episode_seed, Stream::Drift),
            context: stream_rng(episode_seed, Stream::Context),
        }
    }
}
