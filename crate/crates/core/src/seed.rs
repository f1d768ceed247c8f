//! Deterministic child-seed derivation.
//!
//! Every random stream in a study is keyed by `(master, variation,
//! replication, purpose)` and mixed with SplitMix64, so a replication's
//! randomness never depends on how many other replications exist or on the
//! order in which they run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a random stream is used for. Distinct purposes never share a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Expertise = 1,
    Seeding = 2,
    Dynamics = 3,
}

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for replication `replication` of variation point `variation`.
pub fn child_seed(master: u64, variation: u64, replication: u64) -> u64 {
    let a = splitmix64(master);
    let b = splitmix64(a ^ variation.wrapping_mul(0xD1B5_4A32_D192_ED03));
    splitmix64(b ^ replication.wrapping_mul(0xABC9_8388_FB8B_AC03))
}

/// RNG for one purpose under a run seed.
pub fn stream_rng(run_seed: u64, stream: Stream) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(run_seed ^ (stream as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}
