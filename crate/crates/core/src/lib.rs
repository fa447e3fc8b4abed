//! Finite-field Chevalley groups, their unipotent subgroups and coset
//! complexes, with tools to test homological and coarse simple connectivity.

pub mod chains;
pub mod chevalley;
pub mod complex;
pub mod gf;
pub mod lifting;
pub mod f2rank;
pub mod roots;
pub mod sms;
pub mod unipotent;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Seeded RNG used by every sampled check.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
