//! Haar-type orthonormal wavelet bases on a dyadic system.
//!
//! A cube with `N ≥ 2` children carries `N − 1` wavelets obtained by
//! Helmert orthogonalization of the child indicators. The child sharing the
//! parent's center comes first, the rest follow in ascending center id, so
//! the `i`-th wavelet of a level-`k` cube is labeled by the center of its
//! `(i+1)`-th child, a point of `net(k+1) ∖ net(k)`.

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dyadic::{CubeId, DyadicSystem};
use crate::error::{Error, Result};
use crate::space::FiniteSpace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisId {
    Scaling,
    Wavelet { level: i32, center: usize },
}

impl BasisId {
    pub fn is_wavelet(&self) -> bool {
        matches!(self, BasisId::Wavelet { .. })
    }
}

#[derive(Debug, Clone)]
pub struct Wavelet {
    pub level: i32,
    pub center: usize,
    /// Dense per-point values.
    pub values: Vec<f64>,
    /// Points where `values` is nonzero, ascending.
    pub support: Vec<usize>,
    pub support_cube: CubeId,
    pub scale: f64,
}

impl Wavelet {
    pub fn id(&self) -> BasisId {
        BasisId::Wavelet {
            level: self.level,
            center: self.center,
        }
    }
}

#[derive(Debug, Clone)]
pub struct WaveletBasis {
    system: Arc<DyadicSystem>,
    wavelets: Vec<Wavelet>,
    scaling: f64,
    index: HashMap<BasisId, usize>,
}

/// Orthonormal Haar basis: one constant scaling function plus `N(Q) − 1`
/// wavelets per cube.
pub fn build_haar(system: Arc<DyadicSystem>) -> WaveletBasis {
    let space = system.space().clone();
    let n = space.len();
    let mut wavelets = Vec::with_capacity(n.saturating_sub(1));
    for k in system.level_range() {
        if k == system.k_max() {
            break;
        }
        let children_level = system.cubes(k + 1);
        for cube in system.cubes(k) {
            if cube.children.len() < 2 {
                continue;
            }
            let mut kids: Vec<usize> = cube.children.clone();
            kids.sort_by_key(|&c| (children_level[c].center != cube.center, children_level[c].center));
            let mut union: Vec<usize> = children_level[kids[0]].members.clone();
            let mut union_measure = children_level[kids[0]].measure;
            for &c in &kids[1..] {
                let child = &children_level[c];
                let m = child.measure;
                let denom = union_measure + m;
                let a = (m / (union_measure * denom)).sqrt();
                let b = (union_measure / (m * denom)).sqrt();
                let mut values = vec![0.0; n];
                for &x in &union {
                    values[x] = a;
                }
                for &x in &child.members {
                    values[x] = -b;
                }
                let mut support: Vec<usize> = union.iter().chain(&child.members).copied().collect();
                support.sort_unstable();
                wavelets.push(Wavelet {
                    level: k,
                    center: child.center,
                    values,
                    support,
                    support_cube: cube.id,
                    scale: cube.side_length,
                });
                union.extend_from_slice(&child.members);
                union_measure += m;
            }
        }
    }
    let index = wavelets
        .iter()
        .enumerate()
        .map(|(i, w)| (w.id(), i + 1))
        .chain(std::iter::once((BasisId::Scaling, 0)))
        .collect();
    WaveletBasis {
        scaling: space.total_measure().powf(-0.5),
        system,
        wavelets,
        index,
    }
}

impl WaveletBasis {
    pub fn system(&self) -> &Arc<DyadicSystem> {
        &self.system
    }

    pub fn space(&self) -> &Arc<FiniteSpace> {
        self.system.space()
    }

    /// Number of basis functions, scaling included; equals the point count.
    pub fn len(&self) -> usize {
        self.wavelets.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn wavelets(&self) -> &[Wavelet] {
        &self.wavelets
    }

    /// Constant value `μ(X)^{-1/2}` of the scaling function.
    pub fn scaling_value(&self) -> f64 {
        self.scaling
    }

    /// Basis order: scaling first, then wavelets by level and cube.
    pub fn ids(&self) -> Vec<BasisId> {
        std::iter::once(BasisId::Scaling)
            .chain(self.wavelets.iter().map(Wavelet::id))
            .collect()
    }

    pub fn position(&self, id: BasisId) -> Option<usize> {
        self.index.get(&id).copied()
    }

    /// Dense values of basis function `i` in basis order.
    pub fn function(&self, i: usize) -> Vec<f64> {
        if i == 0 {
            vec![self.scaling; self.space().len()]
        } else {
            self.wavelets[i - 1].values.clone()
        }
    }

    /// Support cube of basis function `i`; the top cube for the scaling function.
    pub fn cube_of(&self, i: usize) -> CubeId {
        if i == 0 {
            self.system.top()
        } else {
            self.wavelets[i - 1].support_cube
        }
    }

    /// Decay exponent `(1 + 2·log₂ a0)⁻¹` of the smooth construction, kept as metadata.
    pub fn decay_exponent(&self) -> f64 {
        1.0 / (1.0 + 2.0 * self.space().a0().log2())
    }

    pub fn wavelets_on(&self, cube: CubeId) -> usize {
        self.wavelets.iter().filter(|w| w.support_cube == cube).count()
    }

    /// Weighted pairings `⟨f, b⟩ = Σ f·b·μ` against every basis function.
    pub fn transform(&self, f: &[f64]) -> Result<Vec<f64>> {
        let space = self.space();
        if f.len() != space.len() {
            return Err(Error::DimensionMismatch {
                expected: space.len(),
                got: f.len(),
            });
        }
        let mut out = Vec::with_capacity(self.len());
        out.push(
            self.scaling * f.iter().zip(space.weights()).map(|(v, w)| v * w).sum::<f64>(),
        );
        for w in &self.wavelets {
            out.push(
                w.support
                    .iter()
                    .map(|&x| f[x] * w.values[x] * space.weight(x))
                    .sum(),
            );
        }
        Ok(out)
    }

    pub fn inverse_transform(&self, coefficients: &[f64]) -> Result<Vec<f64>> {
        if coefficients.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: coefficients.len(),
            });
        }
        let mut f = vec![coefficients[0] * self.scaling; self.space().len()];
        for (w, &c) in self.wavelets.iter().zip(&coefficients[1..]) {
            if c == 0.0 {
                continue;
            }
            for &x in &w.support {
                f[x] += c * w.values[x];
            }
        }
        Ok(f)
    }

    /// Weighted Gram matrix in basis order, row-major.
    pub fn gram(&self) -> Vec<f64> {
        let m = self.len();
        let funcs: Vec<Vec<f64>> = (0..m).map(|i| self.function(i)).collect();
        let weights = self.space().weights();
        let mut g = vec![0.0; m * m];
        for i in 0..m {
            for j in i..m {
                let v: f64 = funcs[i]
                    .iter()
                    .zip(&funcs[j])
                    .zip(weights)
                    .map(|((a, b), w)| a * b * w)
                    .sum();
                g[i * m + j] = v;
                g[j * m + i] = v;
            }
        }
        g
    }

    /// Coefficients as `(k, α, value)` triples; the scaling entry has no level.
    pub fn coefficient_triples(&self, coefficients: &[f64]) -> Vec<CoefficientTriple> {
        self.ids()
            .into_iter()
            .zip(coefficients)
            .map(|(id, &value)| match id {
                BasisId::Scaling => CoefficientTriple {
                    level: None,
                    center: None,
                    value,
                },
                BasisId::Wavelet { level, center } => CoefficientTriple {
                    level: Some(level),
                    center: Some(center),
                    value,
                },
            })
            .collect()
    }

    pub fn export(&self) -> BasisExport {
        BasisExport {
            scaling: self.scaling,
            decay_exponent: self.decay_exponent(),
            wavelets: self
                .wavelets
                .iter()
                .map(|w| WaveletExport {
                    level: w.level,
                    center: w.center,
                    support_cube: w.support_cube,
                    scale: w.scale,
                    values: w.support.iter().map(|&x| (x, w.values[x])).collect(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoefficientTriple {
    pub level: Option<i32>,
    pub center: Option<usize>,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WaveletExport {
    pub level: i32,
    pub center: usize,
    pub support_cube: CubeId,
    pub scale: f64,
    pub values: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BasisExport {
    pub scaling: f64,
    pub decay_exponent: f64,
    pub wavelets: Vec<WaveletExport>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::BuildOptions;
    use crate::space::Metric;

    fn basis(xs: &[f64], weights: Vec<f64>, delta: f64) -> WaveletBasis {
        let coords: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        let space = Arc::new(FiniteSpace::from_coords(&coords, weights, Metric::Euclidean, 1.0).unwrap());
        build_haar(Arc::new(DyadicSystem::build(space, BuildOptions::desk(delta)).unwrap()))
    }

    #[test]
    fn two_point_haar() {
        let (w1, w2) = (1.0, 3.0);
        let b = basis(&[0.0, 1.0], vec![w1, w2], 0.25);
        assert_eq!(b.wavelets().len(), 1);
        let v = &b.wavelets()[0].values;
        assert!((v[0] - (w2 / (w1 * (w1 + w2))).sqrt()).abs() < 1e-15);
        assert!((v[1] + (w1 / (w2 * (w1 + w2))).sqrt()).abs() < 1e-15);
        assert_eq!(b.wavelets()[0].center, 1);
    }

    #[test]
    fn line_counts_and_gram() {
        let b = basis(&[0.0, 1.0, 2.0, 10.0], vec![1.0; 4], 0.25);
        assert_eq!(b.len(), 4);
        let sys = b.system();
        for cube in sys.all_cubes() {
            let expected = cube.children.len().saturating_sub(1);
            assert_eq!(b.wavelets_on(cube.id), expected);
        }
        let g = b.gram();
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g[i * 4 + j] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn unit_coefficients() {
        let b = basis(&[0.0, 1.0, 2.0, 10.0], vec![1.0, 2.0, 0.5, 1.5], 0.25);
        for i in 0..b.len() {
            let c = b.transform(&b.function(i)).unwrap();
            for (j, v) in c.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((v - want).abs() < 1e-12);
            }
        }
        assert!(b.transform(&[1.0]).is_err());
    }
}
