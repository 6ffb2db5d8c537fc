//! Deterministic named substreams.
//!
//! Every random quantity in this crate is drawn from a stream addressed by
//! `(seed, label, index)`. Streams are independent of worker count and
//! evaluation order, so Monte Carlo results replay bit-exactly under any
//! parallel schedule.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream labels used across the crate. Fixed here so that a config seed
/// plus a label pins down every draw in a run.
pub mod label {
    pub const GENERATOR: &str = "generator";
    pub const DITHER: &str = "dither";
    pub const NOISE: &str = "noise";
    pub const MESSAGE: &str = "message";
    pub const SAMPLE: &str = "sample";
    pub const PROBE: &str = "probe";
    pub const MEMBER: &str = "member";
    pub const CENTER: &str = "center";
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A family of independent random streams sharing one 64-bit seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Substream {
    key: u64,
}

impl Substream {
    /// Derives the stream family for `label` under `seed`.
    pub fn new(seed: u64, stream_label: &str) -> Self {
        let mut state = seed;
        splitmix64(&mut state);
        for chunk in stream_label.as_bytes().chunks(8) {
            let mut word = [0u8; 8];
            word[..chunk.len()].copy_from_slice(chunk);
            state ^= u64::from_le_bytes(word);
            splitmix64(&mut state);
        }
        Substream { key: state }
    }

    /// Counter-based generator for one sample/trial/member index.
    pub fn rng(&self, index: u64) -> ChaCha8Rng {
        let mut state = self.key ^ index.wrapping_mul(0xd6e8_feb8_6659_fd93);
        let mut seed = [0u8; 32];
        for word in seed.chunks_exact_mut(8) {
            word.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        ChaCha8Rng::from_seed(seed)
    }

    /// A stream family independent of this one, for sub-tasks that draw
    /// their own samples.
    pub fn child(&self, child_label: &str) -> Substream {
        Substream::new(self.key, child_label)
    }
}
