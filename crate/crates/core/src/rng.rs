use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Seeded generator for an independent stream `stream` under `seed`.
///
/// Every random draw in the crate goes through this, so results depend only
/// on `(seed, stream)` and never on scheduling.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
