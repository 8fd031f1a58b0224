//! Counter-based random draws.
//!
//! Every uniform value used by a simulation is a pure function of
//! `(seed, round_id, draw_index)`: ChaCha8 keyed by the seed, with the round
//! id as the stream and the draw index as the word position. Rounds can be
//! evaluated in any order or in parallel with bit-identical results.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Fixed per-round draw schedule.
pub mod draw {
    pub const ALICE_LABEL: usize = 0;
    pub const CHANNEL_DECOHERENCE: usize = 1;
    pub const CHANNEL_LOSS: usize = 2;
    pub const EVE_DECISION: usize = 3;
    pub const EVE_MEASURE: usize = 4;
    pub const EVE_COIN: usize = 5;
    pub const BOB_ROUTE: usize = 6;
    pub const BOB_MEASURE: usize = 7;
    pub const COUNT: usize = 8;
}

/// Stream reserved for the public-comparison sampler; never a round id in
/// practice.
const SAMPLING_STREAM: u64 = u64::MAX;

fn to_unit(x: u64) -> f64 {
    // top 53 bits → [0, 1)
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform value in `[0, 1)` for one slot of one round's schedule.
pub fn round_draws(seed: u64, round_id: u64, draw_index: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(round_id);
    // word positions count 32-bit words
    rng.set_word_pos(2 * draw_index as u128);
    to_unit(rng.next_u64())
}

/// Generator of whole per-round schedules for one seed.
#[derive(Clone)]
pub struct RoundDraws {
    base: ChaCha8Rng,
}

impl RoundDraws {
    pub fn new(seed: u64) -> Self {
        RoundDraws { base: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// All draws of one round; entry `k` equals `round_draws(seed, round_id, k)`.
    pub fn round(&self, round_id: u64) -> [f64; draw::COUNT] {
        let mut rng = self.base.clone();
        rng.set_stream(round_id);
        rng.set_word_pos(0);
        std::array::from_fn(|_| to_unit(rng.next_u64()))
    }
}

/// Generator for choosing which kept rounds are compared in public.
pub fn sampling_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(SAMPLING_STREAM);
    rng.set_word_pos(0);
    rng
}
