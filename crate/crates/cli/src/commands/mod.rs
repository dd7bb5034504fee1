//! One module per subcommand.

pub mod analyze;
pub mod depth;
pub mod gcos;
pub mod pit;
pub mod rescale;
pub mod stats;
pub mod verify;
pub mod weight_map;

use rand_chacha::ChaCha8Rng;

/// Per-sample generator: master seed offset by the sample's position in
/// stem order, so results are reproducible regardless of worker scheduling.
pub fn sample_rng(seed: u64, index: usize) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed.wrapping_add(index as u64))
}
