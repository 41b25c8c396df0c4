//! Seeded generator streams.
//!
//! Every logical stream of randomness (a block of Monte Carlo trials, one
//! solver restart) gets its own ChaCha stream derived from the user seed and
//! a stream index, so results never depend on how work is split between
//! threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator type used throughout the crate.
pub type StreamRng = ChaCha8Rng;

/// Generator for stream `stream` of the experiment seeded with `seed`.
pub fn substream(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
