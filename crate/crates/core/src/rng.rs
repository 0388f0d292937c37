//! Seeded random streams.
//!
//! Every random component of an experiment draws from its own ChaCha8 stream
//! derived from the experiment seed, so changing one component (e.g. the
//! noise level) never shifts the draws of another (e.g. the mask).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    /// Entries of the low-rank factors.
    Factors = 1,
    /// Measurement noise.
    Noise = 2,
    /// Sampling-mask positions.
    Mask = 3,
    /// Kept DCT frequencies.
    Frequencies = 4,
    /// Synthetic test images.
    Image = 5,
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}
