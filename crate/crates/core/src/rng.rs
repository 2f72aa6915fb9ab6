//! Seeded random streams. Each consumer draws from its own ChaCha stream so
//! adding draws in one place never shifts another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    WeightInit = 1,
    SoftMaskInit = 2,
    RandomPrune = 3,
    Split = 4,
    Sbm = 5,
    Dropout = 6,
}

pub fn stream(seed: u64, which: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}
