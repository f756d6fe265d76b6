//! Counter-style random substreams.
//!
//! Every path owns a ChaCha key derived from `(seed, path)`. Within a path each
//! `(step, slot)` pair selects its own ChaCha stream, so a coordinate map sees
//! the same noise whichever branch order the scheme picks, and results do not
//! depend on how paths are distributed over threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Slots available per step. Slot 0 is reserved for branch selection.
pub const SLOTS_PER_STEP: u64 = 64;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathStreams {
    key: [u8; 32],
}

impl PathStreams {
    pub fn new(seed: u64, path: u64) -> Self {
        let mut key = [0u8; 32];
        let mut state = splitmix(seed) ^ splitmix(path.wrapping_add(0x632b_e59b_d9b4_e019));
        for chunk in key.chunks_mut(8) {
            state = splitmix(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        PathStreams { key }
    }

    /// Independent generator for `(step, slot)`; `slot < SLOTS_PER_STEP`.
    pub fn stream(&self, step: u64, slot: u64) -> ChaCha8Rng {
        debug_assert!(slot < SLOTS_PER_STEP);
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(step.wrapping_mul(SLOTS_PER_STEP).wrapping_add(slot));
        rng.set_word_pos(0);
        rng
    }
}

/// Generator for auxiliary one-off draws keyed by `(seed, tag)`.
pub fn seeded(seed: u64, tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix(seed ^ splitmix(tag)))
}
