//! Seeded, stream-separated random number generation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator for one purpose-specific stream of a user seed. Distinct
/// streams of the same seed are independent.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
