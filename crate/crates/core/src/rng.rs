//! Seeded generators. Each consumer draws from its own ChaCha stream so that
//! e.g. dropout masks never shift parameter initialization.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Init = 1,
    Dropout = 2,
    Batches = 3,
    Split = 4,
    Generator = 5,
    Features = 6,
    Simulation = 7,
    Holdout = 8,
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}
