//! Functions and subsets on the product point grid `X₁ × X₂`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense function on an `n1 × n2` grid, row-major in `x1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub n1: usize,
    pub n2: usize,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(n1: usize, n2: usize) -> Self {
        GridFunction {
            n1,
            n2,
            values: vec![0.0; n1 * n2],
        }
    }

    pub fn from_fn(n1: usize, n2: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(n1 * n2);
        for x1 in 0..n1 {
            for x2 in 0..n2 {
                values.push(f(x1, x2));
            }
        }
        GridFunction { n1, n2, values }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n1 = rows.len();
        let n2 = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != n2) {
            return Err(Error::DimensionMismatch {
                expected: n2,
                got: bad.len(),
            });
        }
        Ok(GridFunction {
            n1,
            n2,
            values: rows.concat(),
        })
    }

    /// Outer product `f1 ⊗ f2`.
    pub fn tensor(f1: &[f64], f2: &[f64]) -> Self {
        Self::from_fn(f1.len(), f2.len(), |a, b| f1[a] * f2[b])
    }

    #[inline]
    pub fn get(&self, x1: usize, x2: usize) -> f64 {
        self.values[x1 * self.n2 + x2]
    }

    #[inline]
    pub fn set(&mut self, x1: usize, x2: usize, v: f64) {
        self.values[x1 * self.n2 + x2] = v;
    }

    pub fn row(&self, x1: usize) -> &[f64] {
        &self.values[x1 * self.n2..(x1 + 1) * self.n2]
    }

    pub fn scaled(&self, t: f64) -> Self {
        GridFunction {
            n1: self.n1,
            n2: self.n2,
            values: self.values.iter().map(|v| v * t).collect(),
        }
    }

    /// `self += t·other`.
    pub fn add_scaled(&mut self, t: f64, other: &GridFunction) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += t * b;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn check_shape(&self, n1: usize, n2: usize) -> Result<()> {
        if self.n1 != n1 || self.n2 != n2 || self.values.len() != n1 * n2 {
            return Err(Error::DimensionMismatch {
                expected: n1 * n2,
                got: self.values.len(),
            });
        }
        Ok(())
    }
}

/// A subset of the grid with its product measure.
#[derive(Debug, Clone, PartialEq)]
pub struct OpenSet {
    pub n1: usize,
    pub n2: usize,
    mask: Vec<bool>,
    pub measure: f64,
}

impl OpenSet {
    /// Build from a membership mask; `weights` are the two factor measures.
    pub fn from_mask(weights: [&[f64]; 2], mask: Vec<bool>) -> Self {
        let (n1, n2) = (weights[0].len(), weights[1].len());
        assert_eq!(mask.len(), n1 * n2, "mask shape");
        let mut measure = 0.0;
        for x1 in 0..n1 {
            for x2 in 0..n2 {
                if mask[x1 * n2 + x2] {
                    measure += weights[0][x1] * weights[1][x2];
                }
            }
        }
        OpenSet {
            n1,
            n2,
            mask,
            measure,
        }
    }

    pub fn from_points(weights: [&[f64]; 2], points: &[(usize, usize)]) -> Self {
        let n2 = weights[1].len();
        let mut mask = vec![false; weights[0].len() * n2];
        for &(a, b) in points {
            mask[a * n2 + b] = true;
        }
        Self::from_mask(weights, mask)
    }

    pub fn empty(n1: usize, n2: usize) -> Self {
        OpenSet {
            n1,
            n2,
            mask: vec![false; n1 * n2],
            measure: 0.0,
        }
    }

    #[inline]
    pub fn contains(&self, x1: usize, x2: usize) -> bool {
        self.mask[x1 * self.n2 + x2]
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn len(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|&m| m)
    }

    /// Members as sorted `(x1, x2)` pairs.
    pub fn points(&self) -> Vec<(usize, usize)> {
        (0..self.n1)
            .flat_map(|a| (0..self.n2).map(move |b| (a, b)))
            .filter(|&(a, b)| self.contains(a, b))
            .collect()
    }

    pub fn is_subset_of(&self, other: &OpenSet) -> bool {
        self.mask.iter().zip(&other.mask).all(|(&a, &b)| !a || b)
    }

    /// `true` when the product `members1 × members2` lies inside the set.
    pub fn contains_product(&self, members1: &[usize], members2: &[usize]) -> bool {
        members1
            .iter()
            .all(|&a| members2.iter().all(|&b| self.contains(a, b)))
    }

    pub fn union(&self, other: &OpenSet, weights: [&[f64]; 2]) -> OpenSet {
        let mask = self.mask.iter().zip(&other.mask).map(|(&a, &b)| a || b).collect();
        OpenSet::from_mask(weights, mask)
    }
}

/// Exported as the measure plus the sorted `(i, j)` member list.
impl Serialize for OpenSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("OpenSet", 2)?;
        st.serialize_field("measure", &self.measure)?;
        st.serialize_field("points", &self.points())?;
        st.end()
    }
}
