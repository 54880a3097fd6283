#![allow(dead_code)]

use std::sync::Arc;

use hardy_core::generate::random_space;
use hardy_core::{BuildOptions, FiniteSpace, GridFunction, Metric, ProductCoefficients, ProductSpace};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn line(xs: &[f64], weights: Vec<f64>) -> Arc<FiniteSpace> {
    let coords: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
    Arc::new(FiniteSpace::from_coords(&coords, weights, Metric::Euclidean, 1.0).unwrap())
}

/// Product of a random 1-D and a random 2-D space with the default grid.
pub fn random_pspace(seed: u64, n1: usize, n2: usize) -> ProductSpace {
    let mut r = rng(seed);
    let s1 = Arc::new(random_space(n1, 1, 1.0, &mut r).unwrap());
    let s2 = Arc::new(random_space(n2, 2, 1.0, &mut r).unwrap());
    ProductSpace::from_spaces(s1, s2, BuildOptions::default()).unwrap()
}

/// Open balls `{y : d(c, y) < r}` for `r` between consecutive distances from
/// each center, and one radius past the farthest point.
fn all_balls(space: &FiniteSpace) -> Vec<Vec<usize>> {
    let n = space.len();
    let mut out = Vec::new();
    for c in 0..n {
        let mut d: Vec<f64> = (0..n).map(|y| space.d(c, y)).collect();
        d.sort_by(f64::total_cmp);
        d.dedup();
        let mut radii: Vec<f64> = d.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        radii.push(d[d.len() - 1] + 1.0);
        for r in radii {
            out.push((0..n).filter(|&y| space.d(c, y) < r).collect());
        }
    }
    out
}

pub fn brute_strong_maximal(ps: &ProductSpace, g: &GridFunction) -> GridFunction {
    let (n1, n2) = ps.dims();
    let [w1, w2] = ps.weights();
    let balls1 = all_balls(ps.space(0));
    let balls2 = all_balls(ps.space(1));
    GridFunction::from_fn(n1, n2, |x1, x2| {
        let mut best: f64 = 0.0;
        for b1 in balls1.iter().filter(|b| b.contains(&x1)) {
            for b2 in balls2.iter().filter(|b| b.contains(&x2)) {
                let mut mass = 0.0;
                let mut m1 = 0.0;
                for &a in b1 {
                    m1 += w1[a];
                }
                let m2: f64 = b2.iter().map(|&b| w2[b]).sum();
                for &a in b1 {
                    for &b in b2 {
                        mass += g.get(a, b).abs() * w1[a] * w2[b];
                    }
                }
                best = best.max(mass / (m1 * m2));
            }
        }
        best
    })
}

/// Supremum of `(μ(Ω)^{1−2/p} Σ_{R⊆Ω} |c_R|²)^{1/2}` over every nonempty
/// subset `Ω` of the grid.
pub fn brute_cmo(ps: &ProductSpace, c: &ProductCoefficients, p: f64) -> f64 {
    let (n1, n2) = ps.dims();
    let [w1, w2] = ps.weights();
    let n = n1 * n2;
    assert!(n <= 16, "exhaustive subsets need a tiny grid");
    let mut terms = Vec::new();
    for (i, u) in ps.basis(0).wavelets().iter().enumerate() {
        for (j, v) in ps.basis(1).wavelets().iter().enumerate() {
            let val = c.get(i + 1, j + 1);
            if val != 0.0 {
                let cells: Vec<usize> = ps.system(0).cube(u.support_cube).members.iter()
                    .flat_map(|&a| ps.system(1).cube(v.support_cube).members.iter().map(move |&b| a * n2 + b))
                    .collect();
                terms.push((cells, val * val));
            }
        }
    }
    let mut best: f64 = 0.0;
    for mask in 1u32..(1 << n) {
        let inside = |cell: usize| mask & (1 << cell) != 0;
        let measure: f64 = (0..n).filter(|&c| inside(c)).map(|c| w1[c / n2] * w2[c % n2]).sum();
        let sum: f64 = terms.iter().filter(|(cells, _)| cells.iter().all(|&c| inside(c))).map(|t| t.1).sum();
        best = best.max((measure.powf(1.0 - 2.0 / p) * sum).sqrt());
    }
    best
}
