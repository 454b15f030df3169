//! Named random sub-streams derived from one run seed.
//!
//! Every consumer gets its own ChaCha stream so that changing how many
//! numbers one module draws does not perturb the others.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Channel = 1,
    Source = 2,
    Detector = 3,
    Ldpc = 4,
    Stabilizer = 5,
}

pub fn stream(seed: u64, which: Stream) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}

/// Generator for the `index`-th independent work item of a stream (one
/// decoding trial, one worker shard, ...). Independent of thread count.
pub fn substream(seed: u64, which: Stream, index: u64) -> SimRng {
    debug_assert!(index < 1 << 48);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((which as u64) << 48) | (index + 1));
    rng
}
