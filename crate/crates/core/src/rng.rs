//! Seeded substream derivation.
//!
//! Every stochastic stage draws from its own ChaCha stream derived from the
//! run seed and a stage path (for example `[generation, child_index]`).
//! Streams for different paths are statistically independent, and a stage's
//! stream does not depend on how much randomness other stages consumed, which
//! is what makes parallel and sequential execution produce identical results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive the RNG for the stage identified by `path` under `seed`.
pub fn substream(seed: u64, path: &[u64]) -> ChaCha8Rng {
    let mut state = splitmix64(seed);
    for &component in path {
        state = splitmix64(state ^ splitmix64(component));
    }
    ChaCha8Rng::seed_from_u64(state)
}
