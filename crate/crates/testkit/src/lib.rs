//! Seeded model generators and independent reference implementations used
//! by the test suites.

mod gen;
mod oracle;

pub use gen::{
    multiplicative_chain, random_cut, random_model, random_separable, separable_boundaries, GenConfig,
};
pub use oracle::{chain_rule_gradient, depth_by_paths, oracle_eval, OracleError};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Deterministic generator for a test case seed.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
