//! Seeded fixtures shared by the benchmarks.

use std::sync::Arc;

use hardy_core::generate::{random_mean_zero, random_open_set, random_space};
use hardy_core::{BuildOptions, FiniteSpace, GridFunction, OpenSet, ProductSpace};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn space(n: usize, dim: usize, seed: u64) -> Arc<FiniteSpace> {
    Arc::new(random_space(n, dim, 1.0, &mut ChaCha8Rng::seed_from_u64(seed)).expect("random space"))
}

/// Product of a 1-D and a 2-D random space.
pub fn product(n1: usize, n2: usize, seed: u64) -> ProductSpace {
    ProductSpace::from_spaces(space(n1, 1, seed), space(n2, 2, seed + 1), BuildOptions::default())
        .expect("product space")
}

pub fn mean_zero(pspace: &ProductSpace, seed: u64) -> GridFunction {
    random_mean_zero(pspace, &mut ChaCha8Rng::seed_from_u64(seed)).expect("random function")
}

pub fn open_set(pspace: &ProductSpace, seed: u64) -> OpenSet {
    random_open_set(pspace, &mut ChaCha8Rng::seed_from_u64(seed))
}
