//! Seed derivation.
//!
//! Every random draw in the crate comes from a ChaCha8 generator keyed by the
//! run seed, with a fixed stream id per consumer. Two consumers never share a
//! stream, so adding draws in one stage cannot shift another stage's output.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream ids handed to [`derive`]. Values are part of the manifest contract.
pub mod stream {
    pub const SPLIT: u64 = 1;
    pub const TRAIN: u64 = 2;
    pub const GUARD: u64 = 3;
    pub const EO: u64 = 4;
    pub const SYNTHETIC: u64 = 5;
}

pub const SCHEME: &str = "chacha8(seed_from_u64(seed)).set_stream(id); ids: split=1 train=2 guard=3 eo=4 synthetic=5";

pub fn derive(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
