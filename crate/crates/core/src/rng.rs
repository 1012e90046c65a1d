//! Seeded random number generation shared by every stochastic component.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Deterministic generator for `seed`, decorrelated per `stream`.
pub fn seeded(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub(crate) mod streams {
    pub const SELECTION: u64 = 1;
    pub const KMEANS: u64 = 2;
    pub const HYPER_RESTARTS: u64 = 3;
    pub const HYPER_SUBSET: u64 = 4;
    pub const BUILDINGS: u64 = 5;
    pub const FADING: u64 = 6;
    pub const NOISE: u64 = 7;
}
