//! Seeded random streams.
//!
//! Every stochastic object is driven by a ChaCha8 generator keyed by the
//! master seed, with the replica (or tree, or path) index selecting the
//! ChaCha stream. Streams are independent and need no coordination, so a
//! replica's draws do not depend on which worker runs it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub type StreamRng = ChaCha8Rng;

/// `(master_seed, stream)` pair that fully determines a random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub master_seed: u64,
    pub stream: u64,
}

impl SeedRecord {
    pub fn new(master_seed: u64, stream: u64) -> Self {
        Self { master_seed, stream }
    }

    pub fn rng(&self) -> StreamRng {
        stream_rng(self.master_seed, self.stream)
    }
}

pub fn stream_rng(master_seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}
