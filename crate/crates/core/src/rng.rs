//! Seeded random number streams.
//!
//! Every stochastic component of the workbench draws from a ChaCha8
//! generator addressed by `(seed, stream)`. The stream id is an avalanche
//! mix of a purpose tag and up to two indices (evaluation counter,
//! trajectory index, ...), so independent units of work get independent
//! streams regardless of scheduling order. This is what makes whole runs
//! bit-reproducible across thread counts.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream purpose tags. Keeping them distinct guarantees that e.g. the
/// final-measurement histogram never shares a stream with an objective
/// evaluation.
pub mod purpose {
    pub const INSTANCE: u64 = 1;
    pub const INIT_PARAMS: u64 = 2;
    pub const OBJECTIVE_SAMPLE: u64 = 3;
    pub const NOISE_TRAJECTORY: u64 = 4;
    pub const FINAL_SAMPLE: u64 = 5;
    pub const OPTIMIZER: u64 = 6;
}

/// SplitMix64 finalizer; full-avalanche 64-bit mixing.
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Combines a purpose tag and two indices into a stream id.
pub fn stream_id(tag: u64, a: u64, b: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(tag) ^ a) ^ b)
}

/// A generator addressed by `(seed, stream)`.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
