//! Seeded randomness.
//!
//! Every random object in the crate is drawn from [`ChaCha20Rng`] seeded with a
//! 64-bit integer through `SeedableRng::seed_from_u64`. ChaCha20 is specified
//! bit-for-bit, so a seed reproduces the same masks, bases and signals on every
//! platform. Library code never touches OS entropy.

use rand::SeedableRng;
pub use rand_chacha::ChaCha20Rng;

/// Creates the crate's generator for `seed`.
pub fn seeded(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Derives an independent child seed from a parent seed and a list of tags.
///
/// Uses the SplitMix64 finalizer as a mixing function so that nearby tags
/// (trial 0, trial 1, ...) give unrelated streams.
pub fn derive_seed(parent: u64, tags: &[u64]) -> u64 {
    let mut state = splitmix(parent ^ 0x6a09_e667_f3bc_c908);
    for &tag in tags {
        state = splitmix(state ^ splitmix(tag.wrapping_add(0x9e37_79b9_7f4a_7c15)));
    }
    state
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
