//! Seeded, splittable random streams.
//!
//! Every Monte Carlo replica draws from its own ChaCha8 stream selected by
//! `(seed, replica)`, so results do not depend on scheduling or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// The stream for replica `replica` of an experiment seeded with `seed`.
pub fn stream(seed: u64, replica: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica);
    rng
}

/// Derives an independent seed for a named sub-experiment.
pub fn subseed(seed: u64, tag: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
