//! Keyed random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 stream addressed by
//! `(master seed, purpose, index)`. ChaCha is a counter-mode cipher: the key
//! is derived from the master seed, the 64-bit stream id selects the
//! trajectory and the block counter advances with the step index. A
//! trajectory therefore sees the same numbers no matter which worker runs it
//! or in which order trajectories are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for. Distinct purposes never share a stream id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Purpose {
    FirstPassage = 1,
    DetectorNoise = 2,
    SignalPath = 3,
    Surrogate = 4,
}

const INDEX_BITS: u32 = 56;

/// Opens the stream for `(seed, purpose, index)`.
///
/// `index` must fit in 56 bits.
pub fn stream(seed: u64, purpose: Purpose, index: u64) -> ChaCha8Rng {
    debug_assert!(index < 1 << INDEX_BITS, "stream index out of range");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((purpose as u64) << INDEX_BITS) | index);
    rng
}
