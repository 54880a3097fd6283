//! Seeded random spaces, functions and open sets for corpora and tests.

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::grid::{GridFunction, OpenSet};
use crate::product::{inverse_product_transform, ProductCoefficients, ProductSpace};
use crate::space::{FiniteSpace, Metric};

/// `n` uniform points in `[0,1]^dim` with weights uniform in `[0.5, 2]`.
/// `power = 2` on the Euclidean metric gives a quasi-metric with `a0 = 2`.
pub fn random_space<R: Rng + ?Sized>(n: usize, dim: usize, power: f64, rng: &mut R) -> Result<FiniteSpace> {
    let coords: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..dim).map(|_| rng.random::<f64>()).collect())
        .collect();
    let weights = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
    FiniteSpace::from_coords(&coords, weights, Metric::Euclidean, power)
}

/// Gaussian coefficients on the wavelet⊗wavelet channel only.
pub fn random_mean_zero<R: Rng + ?Sized>(pspace: &ProductSpace, rng: &mut R) -> Result<GridFunction> {
    let (m1, m2) = (pspace.basis(0).len(), pspace.basis(1).len());
    let mut c = ProductCoefficients::zeros(m1, m2);
    for i in 1..m1 {
        for j in 1..m2 {
            c.set(i, j, rng.sample(StandardNormal));
        }
    }
    inverse_product_transform(pspace, &c)
}

pub fn random_nonnegative<R: Rng + ?Sized>(n1: usize, n2: usize, rng: &mut R) -> GridFunction {
    GridFunction::from_fn(n1, n2, |_, _| if rng.random_bool(0.2) { 0.0 } else { rng.random::<f64>() })
}

/// Union of 1 to 4 random dyadic rectangles and a few random points.
pub fn random_open_set<R: Rng + ?Sized>(pspace: &ProductSpace, rng: &mut R) -> OpenSet {
    let (n1, n2) = pspace.dims();
    let ids1 = pspace.system(0).cube_ids();
    let ids2 = pspace.system(1).cube_ids();
    let mut mask = vec![false; n1 * n2];
    for _ in 0..rng.random_range(1..=4) {
        let q1 = *ids1.choose(rng).expect("nonempty grid");
        let q2 = *ids2.choose(rng).expect("nonempty grid");
        for &a in &pspace.system(0).cube(q1).members {
            for &b in &pspace.system(1).cube(q2).members {
                mask[a * n2 + b] = true;
            }
        }
    }
    for _ in 0..rng.random_range(0..=3) {
        mask[rng.random_range(0..n1 * n2)] = true;
    }
    OpenSet::from_mask(pspace.weights(), mask)
}
