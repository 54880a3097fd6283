//! Strong maximal function over products of realized balls, square-function
//! level sets, and the two enlargement operations built on them.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::Serialize;

use crate::dyadic::DyadicSystem;
use crate::error::{Error, Result};
use crate::grid::{GridFunction, OpenSet};
use crate::product::{ProductSpace, RectangleKey};
use crate::space::FiniteSpace;

/// A distinct ball of a finite space: its sorted members and measure.
#[derive(Debug, Clone, PartialEq)]
pub struct RealizedBall {
    pub members: Vec<usize>,
    pub measure: f64,
}

/// Every distinct member set `{y : d(c, y) ≤ d(c, z)}`; these are exactly the
/// sets `B(c, r)` for `r > 0`.
pub fn realized_balls(space: &FiniteSpace) -> Vec<RealizedBall> {
    let n = space.len();
    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
    for c in 0..n {
        let row = space.row(c);
        let mut radii: Vec<f64> = row.to_vec();
        radii.sort_by(f64::total_cmp);
        radii.dedup();
        for r in radii {
            let members: Vec<usize> = (0..n).filter(|&y| row[y] <= r).collect();
            seen.insert(members);
        }
    }
    seen.into_iter()
        .map(|members| RealizedBall {
            measure: space.measure_of(&members),
            members,
        })
        .collect()
}

/// `M_s g(x₁,x₂) = max_{B₁∋x₁, B₂∋x₂} (μ(B₁)μ(B₂))⁻¹ ∫_{B₁×B₂} |g|`.
pub fn strong_maximal(pspace: &ProductSpace, g: &GridFunction) -> Result<GridFunction> {
    strong_maximal_on([pspace.space(0), pspace.space(1)], g)
}

pub fn strong_maximal_on(spaces: [&FiniteSpace; 2], g: &GridFunction) -> Result<GridFunction> {
    let (n1, n2) = (spaces[0].len(), spaces[1].len());
    g.check_shape(n1, n2)?;
    let balls1 = realized_balls(spaces[0]);
    let balls2 = realized_balls(spaces[1]);
    let (w1, w2) = (spaces[0].weights(), spaces[1].weights());
    let partials: Vec<Vec<f64>> = balls1
        .par_iter()
        .map(|b1| {
            let mut column = vec![0.0; n2];
            for &x1 in &b1.members {
                for (x2, c) in column.iter_mut().enumerate() {
                    *c += g.get(x1, x2).abs() * w1[x1];
                }
            }
            let mut best = vec![0.0f64; n2];
            for b2 in &balls2 {
                let mass: f64 = b2.members.iter().map(|&x2| column[x2] * w2[x2]).sum();
                let avg = mass / (b1.measure * b2.measure);
                for &x2 in &b2.members {
                    best[x2] = best[x2].max(avg);
                }
            }
            let mut out = vec![0.0f64; n1 * n2];
            for &x1 in &b1.members {
                out[x1 * n2..(x1 + 1) * n2].copy_from_slice(&best);
            }
            out
        })
        .collect();
    let mut result = GridFunction::zeros(n1, n2);
    for part in partials {
        for (r, v) in result.values.iter_mut().zip(part) {
            *r = r.max(v);
        }
    }
    Ok(result)
}

/// `ε₀ = (2·C_{μ₁}·C_{μ₂}·(36a0₁⁹)^{ω₁}·(36a0₂⁹)^{ω₂})⁻¹`.
pub fn epsilon0(pspace: &ProductSpace) -> f64 {
    epsilon0_for([pspace.space(0), pspace.space(1)])
}

pub fn epsilon0_for(spaces: [&FiniteSpace; 2]) -> f64 {
    let mut denom = 2.0;
    for s in spaces {
        denom *= s.cmu() * (36.0 * s.a0().powi(9)).powf(s.omega());
    }
    1.0 / denom
}

/// `{M_s χ_Ω > ε}`.
pub fn enlarge(pspace: &ProductSpace, omega: &OpenSet, eps: f64) -> Result<OpenSet> {
    enlarge_on([pspace.space(0), pspace.space(1)], omega, eps)
}

pub fn enlarge_on(spaces: [&FiniteSpace; 2], omega: &OpenSet, eps: f64) -> Result<OpenSet> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("epsilon = {eps} must lie in (0, 1)")));
    }
    let chi = GridFunction {
        n1: omega.n1,
        n2: omega.n2,
        values: omega.mask().iter().map(|&m| if m { 1.0 } else { 0.0 }).collect(),
    };
    let m = strong_maximal_on(spaces, &chi)?;
    let mask = m.values.iter().map(|&v| v > eps).collect();
    Ok(OpenSet::from_mask([spaces[0].weights(), spaces[1].weights()], mask))
}

/// Dyadic rectangles of the given systems lying inside `set`, sorted.
pub fn contained_rectangles(systems: [&DyadicSystem; 2], set: &OpenSet) -> Vec<RectangleKey> {
    let n2 = set.n2;
    let mut out = Vec::new();
    let cubes2: Vec<_> = systems[1].all_cubes().collect();
    for q1 in systems[0].all_cubes() {
        // Second-factor points whose whole Q₁-fiber lies in the set.
        let column: Vec<bool> = (0..n2)
            .map(|x2| q1.members.iter().all(|&x1| set.contains(x1, x2)))
            .collect();
        if !column.iter().any(|&c| c) {
            continue;
        }
        for q2 in &cubes2 {
            if q2.members.iter().all(|&x2| column[x2]) {
                out.push(RectangleKey { q1: q1.id, q2: q2.id });
            }
        }
    }
    out.sort();
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct EllEnlargement {
    pub set: OpenSet,
    pub ell: [usize; 2],
    /// Radius multipliers: each rectangle contributes `B(z₁, 2^{ℓ₁}D₁δ^{k₁}) × B(z₂, 2^{ℓ₂}D₂δ^{k₂})`.
    pub dilation: [f64; 2],
    /// Greedy-order seeds of the grids used, for provenance.
    pub grids: [Option<u64>; 2],
    /// `μ(Ω̃_ℓ) / ((1+ℓ₁ω₁+ℓ₂ω₂)·2^{ℓ₁ω₁+ℓ₂ω₂}·μ(Ω̃))`.
    pub measured_constant: f64,
}

/// Union of cube-dilate products over the rectangles inside `omega_tilde`,
/// using the pspace's own grids and certified outer constants.
pub fn ell_enlarge(pspace: &ProductSpace, omega_tilde: &OpenSet, ell: [usize; 2]) -> EllEnlargement {
    let d = [pspace.system(0).constants().outer, pspace.system(1).constants().outer];
    ell_enlarge_on([pspace.system(0), pspace.system(1)], omega_tilde, ell, d)
}

pub fn ell_enlarge_on(
    systems: [&DyadicSystem; 2],
    omega_tilde: &OpenSet,
    ell: [usize; 2],
    dilation: [f64; 2],
) -> EllEnlargement {
    let weights = [systems[0].space().weights(), systems[1].space().weights()];
    let (n1, n2) = (weights[0].len(), weights[1].len());
    let mut mask = vec![false; n1 * n2];
    let rects = contained_rectangles(systems, omega_tilde);
    let factor = [2f64.powi(ell[0] as i32) * dilation[0], 2f64.powi(ell[1] as i32) * dilation[1]];
    for key in rects {
        let b1 = systems[0].dilate_with(key.q1, factor[0]);
        let b2 = systems[1].dilate_with(key.q2, factor[1]);
        for &a in &b1.members {
            for &b in &b2.members {
                mask[a * n2 + b] = true;
            }
        }
    }
    let set = OpenSet::from_mask(weights, mask);
    let (w1, w2) = (systems[0].space().omega(), systems[1].space().omega());
    let growth = ell[0] as f64 * w1 + ell[1] as f64 * w2;
    let budget = (1.0 + growth) * 2f64.powf(growth) * omega_tilde.measure;
    let measured_constant = if budget > 0.0 { set.measure / budget } else { 0.0 };
    EllEnlargement {
        set,
        ell,
        dilation,
        grids: [systems[0].order_seed(), systems[1].order_seed()],
        measured_constant,
    }
}

/// Nested superlevel sets `Ω_j = {S > 2^j}` for `j_lo ≤ j ≤ j_hi`.
#[derive(Debug, Clone, Serialize)]
pub struct LevelSetFamily {
    /// `(j_lo, j_hi)`; `None` when `S ≡ 0`.
    pub j_range: Option<(i32, i32)>,
    pub sets: Vec<OpenSet>,
}

impl LevelSetFamily {
    pub fn get(&self, j: i32) -> Option<&OpenSet> {
        let (lo, hi) = self.j_range?;
        if j < lo || j > hi {
            return None;
        }
        self.sets.get((j - lo) as usize)
    }

    pub fn js(&self) -> Vec<i32> {
        self.j_range.map_or(Vec::new(), |(lo, hi)| (lo..=hi).collect())
    }
}

/// Smallest `j` with `2^j ≥ v`.
fn ceil_log2(v: f64) -> i32 {
    let mut j = v.log2().ceil() as i32;
    while 2f64.powi(j) < v {
        j += 1;
    }
    while 2f64.powi(j - 1) >= v {
        j -= 1;
    }
    j
}

/// Largest `j` with `2^j ≤ v`.
fn floor_log2(v: f64) -> i32 {
    let mut j = v.log2().floor() as i32;
    while 2f64.powi(j) > v {
        j -= 1;
    }
    while 2f64.powi(j + 1) <= v {
        j += 1;
    }
    j
}

pub fn level_sets(weights: [&[f64]; 2], sf: &GridFunction) -> Result<LevelSetFamily> {
    if let Some(v) = sf.values.iter().find(|v| !(**v >= 0.0)) {
        return Err(Error::InvalidParameter(format!("square function has entry {v}")));
    }
    let max = sf.values.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return Ok(LevelSetFamily {
            j_range: None,
            sets: Vec::new(),
        });
    }
    let min_pos = sf
        .values
        .iter()
        .copied()
        .filter(|&v| v > 0.0)
        .fold(f64::INFINITY, f64::min);
    let j_hi = ceil_log2(max);
    let j_lo = floor_log2(min_pos) - 1;
    let sets = (j_lo..=j_hi)
        .map(|j| {
            let t = 2f64.powi(j);
            OpenSet::from_mask(weights, sf.values.iter().map(|&v| v > t).collect())
        })
        .collect();
    Ok(LevelSetFamily {
        j_range: Some((j_lo, j_hi)),
        sets,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LayerCakeReport {
    pub p: f64,
    /// `Σ_j 2^{pj} μ(Ω_j)` over the family's range.
    pub dyadic_sum: f64,
    /// `∫ S^p dμ` from the sorted-value layer-cake integral.
    pub exact_integral: f64,
    pub ratio: f64,
}

/// `∫_0^∞ pλ^{p−1} μ{S > λ} dλ`, exact for step functions: between
/// consecutive sorted values the distribution function is constant.
pub fn layer_cake_integral(weights: [&[f64]; 2], sf: &GridFunction, p: f64) -> f64 {
    let n2 = sf.n2;
    let mut pairs: Vec<(f64, f64)> = sf
        .values
        .iter()
        .enumerate()
        .map(|(idx, &v)| (v, weights[0][idx / n2] * weights[1][idx % n2]))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut tail: f64 = pairs.iter().map(|p| p.1).sum();
    let mut prev = 0.0f64;
    let mut total = 0.0;
    for (v, m) in pairs {
        if v > prev {
            total += (v.powf(p) - prev.powf(p)) * tail;
            prev = v;
        }
        tail -= m;
    }
    total
}

pub fn layer_cake(
    weights: [&[f64]; 2],
    sf: &GridFunction,
    family: &LevelSetFamily,
    p: f64,
) -> LayerCakeReport {
    let dyadic_sum: f64 = family
        .js()
        .into_iter()
        .zip(&family.sets)
        .map(|(j, set)| 2f64.powf(p * j as f64) * set.measure)
        .sum();
    let exact_integral = layer_cake_integral(weights, sf, p);
    LayerCakeReport {
        p,
        dyadic_sum,
        exact_integral,
        ratio: if exact_integral > 0.0 { dyadic_sum / exact_integral } else { 1.0 },
    }
}
