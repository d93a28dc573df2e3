//! Counter-based seeded randomness.
//!
//! Every consumer of randomness in this crate draws from a ChaCha stream
//! addressed by `(seed, stream id)`. Streams are independent of each other and
//! of the order in which they are opened, so generation parallelized across
//! vectors (or repetitions) produces output identical to a sequential run.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Opens the ChaCha stream `stream` under `seed`.
pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream ids reserved by the instance generator and the detector.
///
/// Keeping the layout in one place guarantees that no two consumers ever
/// share a stream for a given seed.
pub mod streams {
    /// Instance metadata (planted index selection).
    pub const INSTANCE_META: u64 = 0;
    /// Vector `i` of the A side is generated from `INSTANCE_A + i`.
    pub const INSTANCE_A: u64 = 1;
    /// Vector `i` of the B side is generated from `INSTANCE_A + n + i`;
    /// computed via [`instance_b`] because it depends on `n`.
    pub fn instance_b(n: u64, i: u64) -> u64 {
        INSTANCE_A + n + i
    }

    /// Detector: hash seed for the A-side partition.
    pub const DETECT_HASH_A: u64 = 0;
    /// Detector: hash seed for the B-side partition.
    pub const DETECT_HASH_B: u64 = 1;
    /// Detector: sign assignment for repetition `rep`.
    pub fn detect_signs(rep: u64) -> u64 {
        2 + rep
    }
}
