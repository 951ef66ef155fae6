//! Named random sub-streams derived from one user seed.
//!
//! Each consumer draws from its own ChaCha stream, so adding a new consumer
//! never shifts the numbers another one sees.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    WeightInit,
    IndicatorInit,
    Shuffle,
    Synth,
    GradCheck,
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::WeightInit => 1,
            Stream::IndicatorInit => 2,
            Stream::Shuffle => 3,
            Stream::Synth => 4,
            Stream::GradCheck => 5,
        }
    }
}

pub fn stream(seed: u64, which: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which.id());
    rng
}
