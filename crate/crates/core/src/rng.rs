//! Seeded random streams.
//!
//! Every consumer of randomness derives its generator from a user seed plus a
//! path of stream tags, so results do not depend on evaluation order or on the
//! number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes `tags` into `seed`, giving an independent 64-bit seed per path.
pub fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(splitmix64(seed), |acc, &t| splitmix64(acc ^ splitmix64(t)))
}

pub fn stream(seed: u64, tags: &[u64]) -> StreamRng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, tags))
}

// Stream tags. Kept distinct so that no two consumers share a generator.
pub(crate) const TAG_POSITIVE: u64 = 1;
pub(crate) const TAG_NEGATIVE: u64 = 2;
pub(crate) const TAG_UNLABELED: u64 = 3;
pub(crate) const TAG_FOLDS: u64 = 10;
pub(crate) const TAG_CENTERS: u64 = 20;
pub(crate) const TAG_MEDIAN: u64 = 21;
pub(crate) const TAG_TRIAL: u64 = 30;
pub(crate) const TAG_BOOTSTRAP: u64 = 31;
pub(crate) const TAG_TEST: u64 = 32;
