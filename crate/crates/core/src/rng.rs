//! Seeding conventions.
//!
//! All randomness comes from ChaCha12 (`rand_chacha::ChaCha12Rng`), a
//! counter-based generator. Replication `r` of an experiment with base seed
//! `s` uses `s ^ (r * 0x9E3779B97F4A7C15)` (wrapping multiply), so results do
//! not depend on the order in which replications are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub type SimRng = ChaCha12Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

pub fn replication_seed(base_seed: u64, rep: u64) -> u64 {
    base_seed ^ rep.wrapping_mul(GOLDEN_GAMMA)
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// Independent stream `stream` for the same seed; used to separate e.g. the
/// projection direction from the replication draws.
pub fn rng_stream(seed: u64, stream: u64) -> SimRng {
    let mut rng = SimRng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
