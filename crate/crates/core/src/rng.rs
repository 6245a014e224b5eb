//! Seeded randomness.
//!
//! Every stochastic step draws from [`Rng`], a ChaCha8 stream generator
//! (`rand_chacha` 0.9), seeded through [`rng_from_seed`]. Independent streams
//! are split off a base seed with [`derive_seed`], which runs both inputs
//! through SplitMix64 so neighbouring indices do not give correlated streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One SplitMix64 output step applied to `x`.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for sub-stream `stream` of `base`.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    splitmix64(base ^ splitmix64(stream))
}

/// Stream tags so different consumers of one base seed never collide.
pub(crate) mod streams {
    pub const INIT: u64 = 0x1;
    pub const SHUFFLE: u64 = 0x2;
    pub const DROPOUT: u64 = 0x3;
    pub const SUBSET: u64 = 0x4;
    pub const TRIAL: u64 = 0x5;
    pub const CELL: u64 = 0x6;
    pub const ITERATION: u64 = 0x7;
    pub const AUGMENT: u64 = 0x8;
    pub const SAMPLE_ORDER: u64 = 0x9;
    pub const ASNN: u64 = 0xA;
    pub const EVAL: u64 = 0xB;
    pub const DRAW: u64 = 0xC;
    pub const SEED_INDEX: u64 = 0xD;
}
