//! Seed splitting for reproducible, order-independent trials.
//!
//! Every random draw in an experiment comes from a ChaCha8 stream keyed by
//! the master seed. The 64-bit stream id packs the trial index and a purpose
//! tag, `stream = trial << 8 | purpose`, so trials and purposes never share
//! key-stream blocks and any trial can be replayed in isolation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a substream is used for within one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Purpose {
    TxPaths = 1,
    RxPaths = 2,
    RandomPorts = 3,
    PathGains = 4,
    Validation = 5,
}

pub fn substream(master_seed: u64, trial: u64, purpose: Purpose) -> ChaCha8Rng {
    assert!(trial < 1 << 56, "trial index {trial} too large for stream packing");
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream((trial << 8) | purpose as u64);
    rng
}
