//! Reproducible random streams.
//!
//! A master seed fixes a ChaCha key; every (realization, purpose) pair selects
//! its own ChaCha stream. Streams never overlap, so adding an engine or a
//! sweep point cannot perturb the channel draw of any realization.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// What a random stream is used for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Purpose {
    Channel,
    Symbols,
    /// Noise for the `index`-th noise level of a sweep.
    Noise(u32),
    /// Anything else (tests, examples).
    Other(u32),
}

impl Purpose {
    fn code(self) -> u64 {
        match self {
            Purpose::Channel => 1,
            Purpose::Symbols => 2,
            Purpose::Noise(i) => 0x1_0000 | i as u64,
            Purpose::Other(i) => 0x2_0000 | i as u64,
        }
    }
}

/// Counter-based split of a master seed.
#[derive(Clone, Copy, Debug)]
pub struct SeedTree {
    master: u64,
}

impl SeedTree {
    pub fn new(master: u64) -> Self {
        Self { master }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    pub fn stream(&self, realization: u64, purpose: Purpose) -> ChaCha12Rng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.master);
        // 24 bits of purpose, 40 bits of realization index.
        rng.set_stream((realization << 24) ^ purpose.code());
        rng
    }
}
