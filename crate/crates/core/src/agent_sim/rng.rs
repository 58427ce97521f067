//! Random streams for the agent simulation.
//!
//! Every draw comes from ChaCha8 keyed by `(seed, round, purpose)` with one
//! stream per validator id, so a validator's randomness in a round does not
//! depend on the order in which validators are visited.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const PURPOSE_SETUP: u32 = 1;
const PURPOSE_REVISION: u32 = 2;

fn keyed(seed: u64, round: u64, purpose: u32) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&round.to_le_bytes());
    key[16..20].copy_from_slice(&purpose.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Stream used once to lay out the initial population.
pub(crate) fn setup_rng(seed: u64) -> ChaCha8Rng {
    keyed(seed, 0, PURPOSE_SETUP)
}

/// Stream of validator `id` for the strategy revision after round `round`.
pub(crate) fn revision_rng(seed: u64, round: u64, id: u64) -> ChaCha8Rng {
    let mut rng = keyed(seed, round, PURPOSE_REVISION);
    rng.set_stream(id);
    rng
}
