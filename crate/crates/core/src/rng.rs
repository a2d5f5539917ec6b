//! Reproducible random streams.
//!
//! A stream is keyed by `(master_seed, stream_index)` and a replicate counter
//! `k`. The key feeds the ChaCha8 seed, `k` selects the ChaCha stream, so the
//! draws seen by replicate `k` do not depend on which worker runs it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub type StreamRng = ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        SeedSpec {
            master_seed,
            stream_index,
        }
    }

    /// A child spec for a sub-experiment; distinct children never share keys.
    pub fn child(&self, index: u64) -> Self {
        let mut state = self.stream_index ^ 0xA076_1D64_78BD_642F;
        let mixed = splitmix64(&mut state) ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        SeedSpec::new(self.master_seed, mixed)
    }

    pub fn stream(&self, k: u64) -> StreamRng {
        derive_stream(*self, k)
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_stream(seed: SeedSpec, k: u64) -> StreamRng {
    let mut state = seed.master_seed;
    let mut key = [0u8; 32];
    for (i, chunk) in key.chunks_exact_mut(8).enumerate() {
        let mut word = splitmix64(&mut state);
        if i == 0 {
            let mut s = seed.stream_index;
            word ^= splitmix64(&mut s);
        }
        chunk.copy_from_slice(&word.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(k);
    rng
}
