//! Reproducible random streams.
//!
//! Every sampler takes an explicit generator. Experiments use ChaCha8 with a
//! 64-bit seed and a per-trial stream id, so trial `t` of node count `n` is
//! reproducible regardless of the order in which trials run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type TrialRng = ChaCha8Rng;

/// Generator for stream `stream` under the master `seed`.
pub fn trial_rng(seed: u64, stream: u64) -> TrialRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
