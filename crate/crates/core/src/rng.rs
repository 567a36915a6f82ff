//! Labeled random substreams.
//!
//! Every stream is a ChaCha20 generator keyed by the 64-bit master seed
//! (little-endian in the first 8 key bytes, the remaining 24 bytes zero)
//! whose 64-bit stream id is `(label << 56) | index`.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub const HONEST: u8 = 1;
pub const ADVERSARY: u8 = 2;
pub const WORKLOAD: u8 = 3;
pub const SHADOW: u8 = 4;

/// Largest index a stream label can be combined with.
pub const MAX_INDEX: u64 = (1 << 56) - 1;

pub fn substream(seed: u64, label: u8, index: u64) -> ChaCha20Rng {
    assert!(index <= MAX_INDEX, "substream index {index} exceeds 56 bits");
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    let mut rng = ChaCha20Rng::from_seed(key);
    rng.set_stream(u64::from(label) << 56 | index);
    rng
}

/// The streams owned by one run.
#[derive(Clone, Debug)]
pub struct Streams {
    pub honest: ChaCha20Rng,
    pub adversary: ChaCha20Rng,
    /// Completes counterfactual permutations; never touches the transcript.
    pub shadow: ChaCha20Rng,
}

impl Streams {
    pub fn for_run(seed: u64, run_index: u64) -> Self {
        Streams {
            honest: substream(seed, HONEST, run_index),
            adversary: substream(seed, ADVERSARY, run_index),
            shadow: substream(seed, SHADOW, run_index),
        }
    }
}
