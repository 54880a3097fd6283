//! Product structure on `X₁ × X₂`: tensor wavelet transforms, the product
//! square function, `H^p` seminorms, Carleson-type `CMO^p` lower bounds and
//! the block square function of the building blocks.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::blocks::{building_blocks, BuildingBlockSet};
use crate::dyadic::{BuildOptions, CubeId, DyadicSystem, GridMode};
use crate::error::{Error, Result};
use crate::grid::{GridFunction, OpenSet};
use crate::space::FiniteSpace;
use crate::wavelet::{build_haar, BasisId, WaveletBasis};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RectangleKey {
    pub q1: CubeId,
    pub q2: CubeId,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DyadicRectangle {
    pub q1: CubeId,
    pub q2: CubeId,
    pub measure: f64,
}

impl DyadicRectangle {
    pub fn key(&self) -> RectangleKey {
        RectangleKey {
            q1: self.q1,
            q2: self.q2,
        }
    }
}

/// Set containment between the cubes of one system, as a dense table.
#[derive(Debug, Clone)]
pub struct ContainmentTable {
    count: usize,
    table: Vec<bool>,
}

impl ContainmentTable {
    pub fn new(system: &DyadicSystem) -> Self {
        let ids = system.cube_ids();
        let count = ids.len();
        let mut table = vec![false; count * count];
        for &outer in &ids {
            for &inner in &ids {
                if inner.level >= outer.level || system.cube(inner).members.len() == system.cube(outer).members.len() {
                    table[system.flat(outer) * count + system.flat(inner)] = system.contains(outer, inner);
                }
            }
        }
        ContainmentTable { count, table }
    }

    /// `inner ⊆ outer` for flat cube indices.
    #[inline]
    pub fn contains(&self, outer: usize, inner: usize) -> bool {
        self.table[outer * self.count + inner]
    }
}

/// Two wavelet bases over two spaces, with the product measure.
#[derive(Debug, Clone)]
pub struct ProductSpace {
    bases: [Arc<WaveletBasis>; 2],
    eta: [f64; 2],
    containment: [Arc<ContainmentTable>; 2],
}

impl ProductSpace {
    pub fn new(b1: Arc<WaveletBasis>, b2: Arc<WaveletBasis>) -> Self {
        let containment = [
            Arc::new(ContainmentTable::new(b1.system())),
            Arc::new(ContainmentTable::new(b2.system())),
        ];
        ProductSpace {
            bases: [b1, b2],
            eta: [1.0, 1.0],
            containment,
        }
    }

    /// Build systems and Haar bases on both factors with shared options.
    pub fn from_spaces(
        s1: Arc<FiniteSpace>,
        s2: Arc<FiniteSpace>,
        options: BuildOptions,
    ) -> Result<Self> {
        let sys1 = Arc::new(DyadicSystem::build(s1, options)?);
        let sys2 = Arc::new(DyadicSystem::build(s2, options)?);
        Ok(Self::new(
            Arc::new(build_haar(sys1)),
            Arc::new(build_haar(sys2)),
        ))
    }

    pub fn basis(&self, i: usize) -> &Arc<WaveletBasis> {
        &self.bases[i]
    }

    pub fn system(&self, i: usize) -> &Arc<DyadicSystem> {
        self.bases[i].system()
    }

    pub fn space(&self, i: usize) -> &Arc<FiniteSpace> {
        self.bases[i].space()
    }

    pub fn containment(&self, i: usize) -> &ContainmentTable {
        &self.containment[i]
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.space(0).len(), self.space(1).len())
    }

    pub fn weights(&self) -> [&[f64]; 2] {
        [self.space(0).weights(), self.space(1).weights()]
    }

    pub fn eta(&self) -> [f64; 2] {
        self.eta
    }

    pub fn total_measure(&self) -> f64 {
        self.space(0).total_measure() * self.space(1).total_measure()
    }

    /// `p0 = max_i ω_i/(ω_i + η_i)`.
    pub fn p0(&self) -> f64 {
        (0..2)
            .map(|i| {
                let w = self.space(i).omega();
                w / (w + self.eta[i])
            })
            .fold(0.0, f64::max)
    }

    pub fn rectangle(&self, q1: CubeId, q2: CubeId) -> DyadicRectangle {
        DyadicRectangle {
            q1,
            q2,
            measure: self.system(0).cube(q1).measure * self.system(1).cube(q2).measure,
        }
    }

    /// `R' ⊆ R` as sets.
    pub fn rect_contains(&self, outer: RectangleKey, inner: RectangleKey) -> bool {
        self.containment[0].contains(self.system(0).flat(outer.q1), self.system(0).flat(inner.q1))
            && self.containment[1].contains(self.system(1).flat(outer.q2), self.system(1).flat(inner.q2))
    }

    pub fn rect_in_set(&self, key: RectangleKey, set: &OpenSet) -> bool {
        set.contains_product(
            &self.system(0).cube(key.q1).members,
            &self.system(1).cube(key.q2).members,
        )
    }

    pub fn rect_set(&self, key: RectangleKey) -> OpenSet {
        let (n1, n2) = self.dims();
        let mut mask = vec![false; n1 * n2];
        for &a in &self.system(0).cube(key.q1).members {
            for &b in &self.system(1).cube(key.q2).members {
                mask[a * n2 + b] = true;
            }
        }
        OpenSet::from_mask(self.weights(), mask)
    }

    /// Every dyadic rectangle, coarse to fine in each factor.
    pub fn all_rectangles(&self) -> Vec<RectangleKey> {
        let c1 = self.system(0).cube_ids();
        let c2 = self.system(1).cube_ids();
        let mut out = Vec::with_capacity(c1.len() * c2.len());
        for &q1 in &c1 {
            for &q2 in &c2 {
                out.push(RectangleKey { q1, q2 });
            }
        }
        out.sort();
        out
    }

    /// `(Σ |g|^p μ)^{1/p}`.
    pub fn lp_norm(&self, g: &GridFunction, p: f64) -> f64 {
        let [w1, w2] = self.weights();
        let mut acc = 0.0;
        for x1 in 0..g.n1 {
            for x2 in 0..g.n2 {
                let v = g.get(x1, x2).abs();
                if v > 0.0 {
                    acc += v.powf(p) * w1[x1] * w2[x2];
                }
            }
        }
        acc.powf(1.0 / p)
    }

    /// `∫ g dμ` over the grid.
    pub fn integral(&self, g: &GridFunction) -> f64 {
        let [w1, w2] = self.weights();
        let mut acc = 0.0;
        for x1 in 0..g.n1 {
            for x2 in 0..g.n2 {
                acc += g.get(x1, x2) * w1[x1] * w2[x2];
            }
        }
        acc
    }

    fn is_reference(&self) -> bool {
        self.system(0).mode() == GridMode::Reference || self.system(1).mode() == GridMode::Reference
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    WaveletWavelet,
    ScalingWavelet,
    WaveletScaling,
    ScalingScaling,
}

/// Dense coefficient matrix indexed by basis positions of both factors.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductCoefficients {
    pub m1: usize,
    pub m2: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelNorms {
    pub wavelet_wavelet: f64,
    pub scaling_wavelet: f64,
    pub wavelet_scaling: f64,
    pub scaling_scaling: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoefficientEntry {
    pub k1: Option<i32>,
    pub a1: Option<usize>,
    pub k2: Option<i32>,
    pub a2: Option<usize>,
    pub channel: Channel,
    pub value: f64,
}

impl ProductCoefficients {
    pub fn zeros(m1: usize, m2: usize) -> Self {
        ProductCoefficients {
            m1,
            m2,
            values: vec![0.0; m1 * m2],
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.m2 + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.m2 + j] = v;
    }

    pub fn channel(i: usize, j: usize) -> Channel {
        match (i == 0, j == 0) {
            (false, false) => Channel::WaveletWavelet,
            (true, false) => Channel::ScalingWavelet,
            (false, true) => Channel::WaveletScaling,
            (true, true) => Channel::ScalingScaling,
        }
    }

    pub fn channel_norms(&self) -> ChannelNorms {
        let mut sq = [0.0f64; 4];
        for i in 0..self.m1 {
            for j in 0..self.m2 {
                let v = self.get(i, j);
                let slot = match Self::channel(i, j) {
                    Channel::WaveletWavelet => 0,
                    Channel::ScalingWavelet => 1,
                    Channel::WaveletScaling => 2,
                    Channel::ScalingScaling => 3,
                };
                sq[slot] += v * v;
            }
        }
        ChannelNorms {
            wavelet_wavelet: sq[0].sqrt(),
            scaling_wavelet: sq[1].sqrt(),
            wavelet_scaling: sq[2].sqrt(),
            scaling_scaling: sq[3].sqrt(),
        }
    }

    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    /// Copy keeping only the wavelet⊗wavelet channel.
    pub fn wavelet_part(&self) -> Self {
        self.filtered(|i, j| i > 0 && j > 0)
    }

    pub fn filtered(&self, keep: impl Fn(usize, usize) -> bool) -> Self {
        let mut out = self.clone();
        for i in 0..self.m1 {
            for j in 0..self.m2 {
                if !keep(i, j) {
                    out.set(i, j, 0.0);
                }
            }
        }
        out
    }

    /// Nonzero entries as `(k₁, α₁, k₂, α₂, value)` records.
    pub fn entries(&self, pspace: &ProductSpace) -> Vec<CoefficientEntry> {
        let ids1 = pspace.basis(0).ids();
        let ids2 = pspace.basis(1).ids();
        let split = |id: BasisId| match id {
            BasisId::Scaling => (None, None),
            BasisId::Wavelet { level, center } => (Some(level), Some(center)),
        };
        let mut out = Vec::new();
        for i in 0..self.m1 {
            for j in 0..self.m2 {
                let value = self.get(i, j);
                if value != 0.0 {
                    let (k1, a1) = split(ids1[i]);
                    let (k2, a2) = split(ids2[j]);
                    out.push(CoefficientEntry {
                        k1,
                        a1,
                        k2,
                        a2,
                        channel: Self::channel(i, j),
                        value,
                    });
                }
            }
        }
        out
    }
}

/// `⟨f, b₁⊗b₂⟩` against every pair of basis functions.
pub fn product_transform(pspace: &ProductSpace, f: &GridFunction) -> Result<ProductCoefficients> {
    let (n1, n2) = pspace.dims();
    f.check_shape(n1, n2)?;
    let (b1, b2) = (pspace.basis(0), pspace.basis(1));
    let (m1, m2) = (b1.len(), b2.len());
    // Transform rows in the second variable, then columns in the first.
    let mut partial = vec![0.0; n1 * m2];
    for x1 in 0..n1 {
        let c = b2.transform(f.row(x1))?;
        partial[x1 * m2..(x1 + 1) * m2].copy_from_slice(&c);
    }
    let mut out = ProductCoefficients::zeros(m1, m2);
    let mut column = vec![0.0; n1];
    for j in 0..m2 {
        for x1 in 0..n1 {
            column[x1] = partial[x1 * m2 + j];
        }
        let c = b1.transform(&column)?;
        for i in 0..m1 {
            out.set(i, j, c[i]);
        }
    }
    Ok(out)
}

pub fn inverse_product_transform(
    pspace: &ProductSpace,
    coefficients: &ProductCoefficients,
) -> Result<GridFunction> {
    let (n1, n2) = pspace.dims();
    let (b1, b2) = (pspace.basis(0), pspace.basis(1));
    let (m1, m2) = (b1.len(), b2.len());
    if coefficients.m1 != m1 || coefficients.m2 != m2 {
        return Err(Error::DimensionMismatch {
            expected: m1 * m2,
            got: coefficients.m1 * coefficients.m2,
        });
    }
    let mut partial = vec![0.0; n1 * m2];
    let mut column = vec![0.0; m1];
    for j in 0..m2 {
        for i in 0..m1 {
            column[i] = coefficients.get(i, j);
        }
        let v = b1.inverse_transform(&column)?;
        for x1 in 0..n1 {
            partial[x1 * m2 + j] = v[x1];
        }
    }
    let mut out = GridFunction::zeros(n1, n2);
    for x1 in 0..n1 {
        let v = b2.inverse_transform(&partial[x1 * m2..(x1 + 1) * m2])?;
        out.values[x1 * n2..(x1 + 1) * n2].copy_from_slice(&v);
    }
    Ok(out)
}

/// `S(f)² = Σ |c|² χ_{Q₁}χ_{Q₂}/(μ(Q₁)μ(Q₂))` over the wavelet⊗wavelet channel.
pub fn square_function(pspace: &ProductSpace, coefficients: &ProductCoefficients) -> GridFunction {
    let (n1, n2) = pspace.dims();
    let (b1, b2) = (pspace.basis(0), pspace.basis(1));
    let (sys1, sys2) = (b1.system(), b2.system());
    let cubes2: Vec<_> = b2.wavelets().iter().map(|w| sys2.cube(w.support_cube)).collect();
    let mut sq = GridFunction::zeros(n1, n2);
    let mut row = vec![0.0; n2];
    for (i, w1) in b1.wavelets().iter().enumerate() {
        row.iter_mut().for_each(|v| *v = 0.0);
        let mut any = false;
        for (j, q2) in cubes2.iter().enumerate() {
            let c = coefficients.get(i + 1, j + 1);
            if c != 0.0 {
                any = true;
                let v = c * c / q2.measure;
                for &x2 in &q2.members {
                    row[x2] += v;
                }
            }
        }
        if !any {
            continue;
        }
        let q1 = sys1.cube(w1.support_cube);
        for &x1 in &q1.members {
            for x2 in 0..n2 {
                sq.values[x1 * n2 + x2] += row[x2] / q1.measure;
            }
        }
    }
    sq.values.iter_mut().for_each(|v| *v = v.sqrt());
    sq
}

fn check_p(pspace: &ProductSpace, p: f64) -> Result<()> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidParameter(format!("p = {p} must lie in (0, 1]")));
    }
    let p0 = pspace.p0();
    if p <= p0 {
        if pspace.is_reference() {
            return Err(Error::InvalidParameter(format!(
                "p = {p} is at or below p0 = {p0:.6}"
            )));
        }
        log::warn!("p = {p} is at or below p0 = {p0:.6}; seminorm computed anyway (desk mode)");
    }
    Ok(())
}

/// `‖S(f)‖_{L^p}`.
pub fn hp_seminorm(pspace: &ProductSpace, f: &GridFunction, p: f64) -> Result<f64> {
    check_p(pspace, p)?;
    let c = product_transform(pspace, f)?;
    Ok(pspace.lp_norm(&square_function(pspace, &c), p))
}

/// Sum of squared wavelet⊗wavelet coefficients on each rectangle.
pub fn rectangle_energies(
    pspace: &ProductSpace,
    coefficients: &ProductCoefficients,
) -> BTreeMap<RectangleKey, f64> {
    let (b1, b2) = (pspace.basis(0), pspace.basis(1));
    let mut out = BTreeMap::new();
    for (i, w1) in b1.wavelets().iter().enumerate() {
        for (j, w2) in b2.wavelets().iter().enumerate() {
            let c = coefficients.get(i + 1, j + 1);
            if c != 0.0 {
                *out.entry(RectangleKey {
                    q1: w1.support_cube,
                    q2: w2.support_cube,
                })
                .or_insert(0.0) += c * c;
            }
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct CmoReport {
    pub value: f64,
    /// Index of the maximizing candidate.
    pub best: Option<usize>,
    pub candidates: usize,
}

/// `max_Ω (μ(Ω)^{1−2/p} Σ_{R⊆Ω} |⟨f, ψψ⟩|²)^{1/2}` over the given candidates.
pub fn cmo_p(
    pspace: &ProductSpace,
    coefficients: &ProductCoefficients,
    p: f64,
    candidates: &[OpenSet],
) -> Result<CmoReport> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidParameter(format!("p = {p} must lie in (0, 1]")));
    }
    if candidates.iter().any(|c| c.measure <= 0.0) {
        return Err(Error::EmptyOpenSet);
    }
    let energies: Vec<(RectangleKey, f64)> = rectangle_energies(pspace, coefficients).into_iter().collect();
    let mut value = 0.0;
    let mut best = None;
    for (idx, omega) in candidates.iter().enumerate() {
        let sum: f64 = energies
            .iter()
            .filter(|(key, _)| pspace.rect_in_set(*key, omega))
            .map(|(_, e)| e)
            .sum();
        let v = (omega.measure.powf(1.0 - 2.0 / p) * sum).sqrt();
        if best.is_none() || v > value {
            value = v;
            best = Some(idx);
        }
    }
    Ok(CmoReport {
        value,
        best,
        candidates: candidates.len(),
    })
}

/// Every dyadic rectangle, plus unions of up to `m` rectangles of the
/// coefficient support. With `m` at least the support size this reaches the
/// supremum over all subsets: shrinking `Ω` to the union of the support
/// rectangles inside it keeps the sum and lowers `μ(Ω)`.
pub fn cmo_candidates(
    pspace: &ProductSpace,
    coefficients: &ProductCoefficients,
    m: usize,
) -> Vec<OpenSet> {
    let mut out: Vec<OpenSet> = pspace.all_rectangles().into_iter().map(|k| pspace.rect_set(k)).collect();
    let support: Vec<RectangleKey> = rectangle_energies(pspace, coefficients).into_keys().collect();
    let sets: Vec<OpenSet> = support.iter().map(|&k| pspace.rect_set(k)).collect();
    let weights = pspace.weights();
    let mut combo: Vec<usize> = Vec::new();
    fn extend(
        start: usize,
        left: usize,
        sets: &[OpenSet],
        combo: &mut Vec<usize>,
        weights: [&[f64]; 2],
        out: &mut Vec<OpenSet>,
    ) {
        if combo.len() >= 2 {
            let mut u = sets[combo[0]].clone();
            for &c in &combo[1..] {
                u = u.union(&sets[c], weights);
            }
            out.push(u);
        }
        if left == 0 {
            return;
        }
        for i in start..sets.len() {
            combo.push(i);
            extend(i + 1, left - 1, sets, combo, weights, out);
            combo.pop();
        }
    }
    extend(0, m, &sets, &mut combo, weights, &mut out);
    out
}

/// Building blocks for every wavelet of one factor, in basis order.
pub fn factor_blocks(
    pspace: &ProductSpace,
    factor: usize,
    gamma: f64,
    cbar: f64,
) -> Result<Vec<BuildingBlockSet>> {
    let space = pspace.space(factor);
    let eta = pspace.eta()[factor];
    pspace
        .basis(factor)
        .wavelets()
        .iter()
        .map(|w| building_blocks(space, w, gamma, cbar, eta))
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockSquareReport {
    pub ell: [usize; 2],
    pub q_dual: f64,
    #[serde(skip)]
    pub values: GridFunction,
    pub norm: f64,
    pub g_norm: f64,
    /// `norm / (2^{ℓ₁ω₁+ℓ₂ω₂}·‖g‖_{q'})`.
    pub ratio: f64,
}

/// `(Σ_R |⟨φ_{ℓ₁}⊗φ_{ℓ₂}, g⟩|² χ_R)^{1/2}` over the wavelet pairs whose
/// rectangle belongs to `family`.
pub fn block_square_function(
    pspace: &ProductSpace,
    g: &GridFunction,
    blocks: [&[BuildingBlockSet]; 2],
    ell: [usize; 2],
    family: &[RectangleKey],
    q_dual: f64,
) -> Result<BlockSquareReport> {
    let (n1, n2) = pspace.dims();
    g.check_shape(n1, n2)?;
    for i in 0..2 {
        let expected = pspace.basis(i).wavelets().len();
        if blocks[i].len() != expected {
            return Err(Error::InvalidParameter(format!(
                "factor {}: {} block sets for {expected} wavelets",
                i + 1,
                blocks[i].len()
            )));
        }
    }
    let [w1, w2] = pspace.weights();
    let wav1 = pspace.basis(0).wavelets();
    let wav2 = pspace.basis(1).wavelets();
    let keys: std::collections::BTreeSet<RectangleKey> = family.iter().copied().collect();
    let mut sq = GridFunction::zeros(n1, n2);
    // ⟨φ⊗φ', g⟩ = Σ_{x1} φ(x1) w1 (Σ_{x2} φ'(x2) w2 g(x1,x2)).
    let mut inner = vec![0.0; n1];
    for (j, bj) in blocks[1].iter().enumerate() {
        let Some(phi2) = bj.block(ell[1]) else { continue };
        for x1 in 0..n1 {
            inner[x1] = (0..n2).map(|x2| phi2[x2] * w2[x2] * g.get(x1, x2)).sum();
        }
        for (i, bi) in blocks[0].iter().enumerate() {
            let key = RectangleKey {
                q1: wav1[i].support_cube,
                q2: wav2[j].support_cube,
            };
            if !keys.contains(&key) {
                continue;
            }
            let Some(phi1) = bi.block(ell[0]) else { continue };
            let pairing: f64 = (0..n1).map(|x1| phi1[x1] * w1[x1] * inner[x1]).sum();
            if pairing == 0.0 {
                continue;
            }
            let v = pairing * pairing;
            for &a in &pspace.system(0).cube(key.q1).members {
                for &b in &pspace.system(1).cube(key.q2).members {
                    sq.values[a * n2 + b] += v;
                }
            }
        }
    }
    sq.values.iter_mut().for_each(|v| *v = v.sqrt());
    let norm = pspace.lp_norm(&sq, q_dual);
    let g_norm = pspace.lp_norm(g, q_dual);
    let growth = 2f64.powf(ell[0] as f64 * pspace.space(0).omega() + ell[1] as f64 * pspace.space(1).omega());
    let ratio = if g_norm > 0.0 { norm / (growth * g_norm) } else { 0.0 };
    Ok(BlockSquareReport {
        ell,
        q_dual,
        values: sq,
        norm,
        g_norm,
        ratio,
    })
}
