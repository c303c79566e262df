//! Seed derivation. Every random draw descends from one master seed.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FITNESS_STREAM: u64 = 0;
const TRAJECTORY_STREAM: u64 = 1;

/// Seed of paper `index`: first word of the ChaCha8 stream `index` keyed by
/// the master seed. Independent of scheduling.
pub fn paper_seed(master_seed: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng.next_u64()
}

/// Generator for a paper's fitness draw.
pub fn fitness_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(FITNESS_STREAM);
    rng
}

/// Generator for a paper's yearly Poisson draws.
pub fn trajectory_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(TRAJECTORY_STREAM);
    rng
}
