//! Seeded random streams.
//!
//! Every stochastic component draws from its own ChaCha stream derived from
//! the experiment seed, so results depend only on seeds and never on the
//! order in which work is scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Named consumers of randomness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Corpus = 1,
    Folds = 2,
    Sampling = 3,
    Skew = 4,
}

/// Independent generator for `(seed, stream, index)`.
pub fn substream(seed: u64, stream: Stream, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((stream as u64) << 48) ^ index);
    rng
}
