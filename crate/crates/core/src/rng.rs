//! Reproducible random number streams.
//!
//! All randomness flows through ChaCha8 generators built here. A base seed
//! selects the key (`seed_from_u64`) and a stream index selects the 64-bit
//! ChaCha stream, so `(seed, stream)` pairs yield statistically independent,
//! non-overlapping sequences. Ensembles assign `stream = path index`, which
//! makes results independent of evaluation order and thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator for the given `(seed, stream)` pair.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
