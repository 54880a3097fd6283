//! Product `(p,q)`-atoms: the constructive decomposition of a doubly
//! mean-zero function, numerical checks of the atom conditions, and the
//! converse bound `‖S(a)‖_p` on generated atoms.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::blocks::BuildingBlockSet;
use crate::dyadic::DyadicSystem;
use crate::error::{Error, Result};
use crate::grid::{GridFunction, OpenSet};
use crate::journe::{maximal_rectangles, maximal_rectangles_on};
use crate::maximal::{ell_enlarge_on, enlarge, enlarge_on, epsilon0, epsilon0_for, level_sets, LevelSetFamily};
use crate::product::{
    factor_blocks, product_transform, square_function, ProductCoefficients, ProductSpace, RectangleKey,
};

/// `c̄ = 2a0²`, the block radius base used by the decomposition.
pub fn default_cbar(a0: f64) -> f64 {
    2.0 * a0 * a0
}

/// `D = a0(C₁ + 2a0²c̄)`: blocks of a wavelet under `Q` at index `ℓ` live in
/// `B(z_Q, 2^ℓ·D·δ^k)`.
pub fn atom_dilation(system: &DyadicSystem, cbar: f64) -> f64 {
    let a0 = system.space().a0();
    a0 * (system.constants().outer + 2.0 * a0 * a0 * cbar)
}

fn check_exponents(p: f64, q: f64) -> Result<()> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidParameter(format!("p = {p} must lie in (0, 1]")));
    }
    if !(q > 1.0 && q.is_finite()) {
        return Err(Error::InvalidParameter(format!("q = {q} must exceed 1")));
    }
    Ok(())
}

/// Lower bound on `γᵢ`: `ωᵢ(1/p + 1/q')` for `q ≥ 2`, `ωᵢ(1/p + 1/2)` below.
pub fn gamma_bound(omega: f64, p: f64, q: f64) -> f64 {
    if q >= 2.0 {
        omega * (1.0 / p + (q - 1.0) / q)
    } else {
        omega * (1.0 / p + 0.5)
    }
}

fn check_gamma(pspace: &ProductSpace, p: f64, q: f64, gamma: [f64; 2]) -> Result<()> {
    for i in 0..2 {
        let bound = gamma_bound(pspace.space(i).omega(), p, q);
        if !(gamma[i] > bound) {
            let constraint = if q >= 2.0 {
                "gamma > omega (1/p + 1/q')"
            } else {
                "gamma > omega (1/p + 1/2)"
            };
            return Err(Error::GammaConstraint {
                factor: i + 1,
                gamma: gamma[i],
                bound,
                constraint: constraint.into(),
            });
        }
    }
    Ok(())
}

fn lq_norm(weights: [&[f64]; 2], g: &GridFunction, q: f64) -> f64 {
    let n2 = g.n2;
    let mut acc = 0.0;
    for (idx, &v) in g.values.iter().enumerate() {
        if v != 0.0 {
            acc += v.abs().powf(q) * weights[0][idx / n2] * weights[1][idx % n2];
        }
    }
    acc.powf(1.0 / q)
}

fn grid_weights(grids: &[Arc<DyadicSystem>; 2]) -> [&[f64]; 2] {
    [grids[0].space().weights(), grids[1].space().weights()]
}

#[derive(Debug, Clone, Serialize)]
pub struct RectangleAtom {
    pub rectangle: RectangleKey,
    #[serde(skip)]
    pub values: GridFunction,
}

#[derive(Debug, Clone)]
pub struct ProductAtom {
    pub values: GridFunction,
    /// The open set `Ω` of the atom.
    pub omega: OpenSet,
    pub ell: [usize; 2],
    pub p: f64,
    pub q: f64,
    /// Radius multipliers `D₁, D₂` of the rectangle-atom supports.
    pub dilation: [f64; 2],
    pub grids: [Arc<DyadicSystem>; 2],
    pub rectangle_atoms: Vec<RectangleAtom>,
}

impl ProductAtom {
    pub fn zero(grids: [Arc<DyadicSystem>; 2], p: f64, q: f64, dilation: [f64; 2]) -> Self {
        let (n1, n2) = (grids[0].space().len(), grids[1].space().len());
        ProductAtom {
            values: GridFunction::zeros(n1, n2),
            omega: OpenSet::empty(n1, n2),
            ell: [0, 0],
            p,
            q,
            dilation,
            grids,
            rectangle_atoms: Vec::new(),
        }
    }

    /// `(1 + ℓ₁ω₁ + ℓ₂ω₂)·2^{ℓ₁ω₁+ℓ₂ω₂}·μ(Ω)`.
    pub fn enlarged_budget(&self) -> f64 {
        let growth = self.growth();
        (1.0 + growth) * 2f64.powf(growth) * self.omega.measure
    }

    fn growth(&self) -> f64 {
        self.ell[0] as f64 * self.grids[0].space().omega() + self.ell[1] as f64 * self.grids[1].space().omega()
    }

    /// `budget^{1/q − 1/p}`, the size bound for `C_q = 1`.
    pub fn size_budget(&self) -> f64 {
        let b = self.enlarged_budget();
        if b > 0.0 {
            b.powf(1.0 / self.q - 1.0 / self.p)
        } else {
            0.0
        }
    }

    pub fn export(&self) -> AtomExport {
        let n2 = self.values.n2;
        AtomExport {
            ell: self.ell,
            p: self.p,
            q: self.q,
            omega_measure: self.omega.measure,
            grids: [self.grids[0].order_seed(), self.grids[1].order_seed()],
            values: self
                .values
                .values
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(idx, &v)| (idx / n2, idx % n2, v))
                .collect(),
            rectangles: self.rectangle_atoms.iter().map(|r| r.rectangle).collect(),
        }
    }
}

/// Sparse atom record: nonzero `(x₁, x₂, value)` triples.
#[derive(Debug, Clone, Serialize)]
pub struct AtomExport {
    pub ell: [usize; 2],
    pub p: f64,
    pub q: f64,
    pub omega_measure: f64,
    pub grids: [Option<u64>; 2],
    pub values: Vec<(usize, usize, f64)>,
    pub rectangles: Vec<RectangleKey>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Provenance {
    pub j: i32,
    pub ell: [usize; 2],
}

#[derive(Debug, Clone)]
pub struct AtomicTerm {
    /// Coefficient of the atom in the series: `block_weight · base_lambda`.
    pub lambda: f64,
    pub base_lambda: f64,
    /// `(c̄₁2^{ℓ₁})^{−γ₁}(c̄₂2^{ℓ₂})^{−γ₂}`.
    pub block_weight: f64,
    pub provenance: Provenance,
    pub atom: ProductAtom,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassSummary {
    pub j: i32,
    pub rectangles: Vec<RectangleKey>,
    pub omega_measure: f64,
    pub enlarged_measure: f64,
    /// `‖S(f_{B_j})‖` in `L^q` (`q ≥ 2`) or `L²` (`q < 2`).
    pub square_norm: f64,
    /// `τ(R)` for each rectangle, aligned.
    pub targets: Vec<RectangleKey>,
}

#[derive(Debug, Clone)]
pub struct AtomicDecomposition {
    pub p: f64,
    pub q: f64,
    pub gamma: [f64; 2],
    pub cbar: [f64; 2],
    pub dilation: [f64; 2],
    pub terms: Vec<AtomicTerm>,
    pub classes: Vec<ClassSummary>,
    /// `‖f − Σλa‖_q / ‖f‖_q`.
    pub residual: f64,
    /// `Σ |λ|^p`.
    pub lambda_sum: f64,
    /// `‖S f‖_p^p`.
    pub hp_norm_p: f64,
    /// `lambda_sum / hp_norm_p`.
    pub lambda_constant: f64,
}

impl AtomicDecomposition {
    pub fn reconstruct(&self, n1: usize, n2: usize) -> GridFunction {
        let mut out = GridFunction::zeros(n1, n2);
        for t in &self.terms {
            out.add_scaled(t.lambda, &t.atom.values);
        }
        out
    }
}

/// The largest `j` with `μ(R ∩ Ω_j) > μ(R)/2`, or `None` when no level
/// qualifies.
pub fn classify_rectangle(pspace: &ProductSpace, family: &LevelSetFamily, key: RectangleKey) -> Option<i32> {
    let members1 = &pspace.system(0).cube(key.q1).members;
    let members2 = &pspace.system(1).cube(key.q2).members;
    let [w1, w2] = pspace.weights();
    let measure = pspace.rectangle(key.q1, key.q2).measure;
    for j in family.js().into_iter().rev() {
        let set = family.get(j)?;
        let mut inside = 0.0;
        for &a in members1 {
            for &b in members2 {
                if set.contains(a, b) {
                    inside += w1[a] * w2[b];
                }
            }
        }
        if inside > measure / 2.0 {
            return Some(j);
        }
    }
    None
}

fn outside_measure(pspace: &ProductSpace, set: Option<&OpenSet>, key: RectangleKey) -> f64 {
    let [w1, w2] = pspace.weights();
    let mut out = 0.0;
    for &a in &pspace.system(0).cube(key.q1).members {
        for &b in &pspace.system(1).cube(key.q2).members {
            if !set.is_some_and(|s| s.contains(a, b)) {
                out += w1[a] * w2[b];
            }
        }
    }
    out
}

/// Wavelet-pair coefficient `c` at first/second wavelet indices.
type Entry = (usize, usize, f64);

struct ClassCells {
    j: i32,
    entries: Vec<(RectangleKey, Entry)>,
    enlarged: OpenSet,
    square_norm: f64,
    horizon: [usize; 2],
}

pub fn atomic_decompose(
    pspace: &ProductSpace,
    f: &GridFunction,
    p: f64,
    q: f64,
    gamma: [f64; 2],
) -> Result<AtomicDecomposition> {
    check_exponents(p, q)?;
    check_gamma(pspace, p, q, gamma)?;
    let (n1, n2) = pspace.dims();
    let coeffs = product_transform(pspace, f)?;
    let norms = coeffs.channel_norms();
    let tol = 1e-10 * coeffs.energy().sqrt();
    if norms.scaling_wavelet > tol || norms.wavelet_scaling > tol || norms.scaling_scaling > tol {
        return Err(Error::MixedChannels {
            sw: norms.scaling_wavelet,
            ws: norms.wavelet_scaling,
            ss: norms.scaling_scaling,
        });
    }
    // Coefficients at round-off level relative to the largest one are zero.
    let largest = coeffs.wavelet_part().values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = 1e-14 * largest;
    let kept = coeffs.filtered(|i, j| i > 0 && j > 0 && coeffs.get(i, j).abs() > floor);

    let cbar = [default_cbar(pspace.space(0).a0()), default_cbar(pspace.space(1).a0())];
    let dilation = [
        atom_dilation(pspace.system(0), cbar[0]),
        atom_dilation(pspace.system(1), cbar[1]),
    ];
    let sf = square_function(pspace, &kept);
    let hp_norm_p = pspace.lp_norm(&sf, p).powf(p);
    let empty = |residual: f64| AtomicDecomposition {
        p,
        q,
        gamma,
        cbar,
        dilation,
        terms: Vec::new(),
        classes: Vec::new(),
        residual,
        lambda_sum: 0.0,
        hp_norm_p,
        lambda_constant: 0.0,
    };
    if kept.values.iter().all(|&v| v == 0.0) {
        let fnorm = lq_norm(pspace.weights(), f, q);
        return Ok(empty(if fnorm > 0.0 { 1.0 } else { 0.0 }));
    }
    let family = level_sets(pspace.weights(), &sf)?;

    let wav1 = pspace.basis(0).wavelets();
    let wav2 = pspace.basis(1).wavelets();
    let mut classes: BTreeMap<i32, Vec<(RectangleKey, Entry)>> = BTreeMap::new();
    let mut rect_class: BTreeMap<RectangleKey, i32> = BTreeMap::new();
    for i in 0..wav1.len() {
        for j in 0..wav2.len() {
            let c = kept.get(i + 1, j + 1);
            if c == 0.0 {
                continue;
            }
            let key = RectangleKey {
                q1: wav1[i].support_cube,
                q2: wav2[j].support_cube,
            };
            let class = match rect_class.get(&key) {
                Some(&class) => class,
                None => {
                    let class = classify_rectangle(pspace, &family, key).ok_or_else(|| {
                        Error::Construction(format!("rectangle {key:?} has no level class"))
                    })?;
                    let measure = pspace.rectangle(key.q1, key.q2).measure;
                    let outside = outside_measure(pspace, family.get(class + 1), key);
                    if outside < measure / 2.0 * (1.0 - 1e-12) {
                        return Err(Error::Construction(format!(
                            "rectangle {key:?} in class {class} has only {outside} of {measure} outside the next level set"
                        )));
                    }
                    rect_class.insert(key, class);
                    class
                }
            };
            classes.entry(class).or_default().push((key, (i, j, c)));
        }
    }

    let blocks1 = factor_blocks(pspace, 0, gamma[0], cbar[0])?;
    let blocks2 = factor_blocks(pspace, 1, gamma[1], cbar[1])?;
    let eps0 = epsilon0(pspace);

    let mut summaries = Vec::new();
    let mut cells_by_class = Vec::new();
    let mut targets_by_class: Vec<BTreeMap<RectangleKey, RectangleKey>> = Vec::new();
    for (&j, entries) in &classes {
        let omega_j = family
            .get(j)
            .ok_or_else(|| Error::Construction(format!("level set {j} missing")))?;
        let enlarged = enlarge(pspace, omega_j, eps0)?;
        let rects: BTreeSet<RectangleKey> = entries.iter().map(|(k, _)| *k).collect();
        for &key in &rects {
            if !pspace.rect_in_set(key, &enlarged) {
                return Err(Error::Construction(format!(
                    "rectangle {key:?} of class {j} leaves the enlarged level set"
                )));
            }
        }
        let fam = maximal_rectangles(pspace, &enlarged);
        let mut candidates: Vec<RectangleKey> = if q >= 2.0 {
            fam.m_all.clone()
        } else {
            let mut c = fam.m1.clone();
            c.extend(fam.m2_prime());
            c
        };
        candidates.sort();
        let mut tau = BTreeMap::new();
        for &key in &rects {
            let target = candidates
                .iter()
                .copied()
                .find(|&t| pspace.rect_contains(t, key))
                .ok_or_else(|| Error::Construction(format!("no maximal rectangle contains {key:?}")))?;
            tau.insert(key, target);
        }
        let mut fb = ProductCoefficients::zeros(kept.m1, kept.m2);
        for (_, (i, jj, c)) in entries {
            fb.set(i + 1, jj + 1, *c);
        }
        let sfb = square_function(pspace, &fb);
        let square_norm = pspace.lp_norm(&sfb, if q >= 2.0 { q } else { 2.0 });
        let horizon = [
            entries.iter().map(|(_, e)| blocks1[e.0].horizon).max().unwrap_or(0),
            entries.iter().map(|(_, e)| blocks2[e.1].horizon).max().unwrap_or(0),
        ];
        summaries.push(ClassSummary {
            j,
            rectangles: rects.iter().copied().collect(),
            omega_measure: omega_j.measure,
            enlarged_measure: enlarged.measure,
            square_norm,
            targets: rects.iter().map(|k| tau[k]).collect(),
        });
        cells_by_class.push(ClassCells {
            j,
            entries: entries.clone(),
            enlarged,
            square_norm,
            horizon,
        });
        targets_by_class.push(tau);
    }

    let mut cells = Vec::new();
    for (ci, class) in cells_by_class.iter().enumerate() {
        for l1 in 0..=class.horizon[0] {
            for l2 in 0..=class.horizon[1] {
                cells.push((ci, [l1, l2]));
            }
        }
    }
    let omega_dims = [pspace.space(0).omega(), pspace.space(1).omega()];
    let grids = [pspace.system(0).clone(), pspace.system(1).clone()];
    let terms: Vec<Option<AtomicTerm>> = cells
        .par_iter()
        .map(|&(ci, ell)| {
            let class = &cells_by_class[ci];
            let growth = ell[0] as f64 * omega_dims[0] + ell[1] as f64 * omega_dims[1];
            let measure_factor = (1.0 + growth) * 2f64.powf(growth) * class.enlarged.measure;
            let exponent = if q >= 2.0 { 1.0 / p - 1.0 / q } else { 1.0 / p - 0.5 };
            let base_lambda = 2f64.powf(growth) * class.square_norm * measure_factor.powf(exponent);
            let rectangle_atoms = assemble_cell(
                &class.entries,
                &targets_by_class[ci],
                [&blocks1, &blocks2],
                ell,
                base_lambda,
                (n1, n2),
            );
            if rectangle_atoms.is_empty() {
                return None;
            }
            let mut values = GridFunction::zeros(n1, n2);
            for r in &rectangle_atoms {
                values.add_scaled(1.0, &r.values);
            }
            let block_weight = blocks_weight(&blocks1, &blocks2, &class.entries, ell);
            Some(AtomicTerm {
                lambda: block_weight * base_lambda,
                base_lambda,
                block_weight,
                provenance: Provenance { j: class.j, ell },
                atom: ProductAtom {
                    values,
                    omega: class.enlarged.clone(),
                    ell,
                    p,
                    q,
                    dilation,
                    grids: grids.clone(),
                    rectangle_atoms,
                },
            })
        })
        .collect();
    let terms: Vec<AtomicTerm> = terms.into_iter().flatten().collect();

    let mut recon = GridFunction::zeros(n1, n2);
    for t in &terms {
        recon.add_scaled(t.lambda, &t.atom.values);
    }
    let mut diff = f.clone();
    diff.add_scaled(-1.0, &recon);
    let fnorm = lq_norm(pspace.weights(), f, q);
    let residual = if fnorm > 0.0 { lq_norm(pspace.weights(), &diff, q) / fnorm } else { 0.0 };
    let lambda_sum: f64 = terms.iter().map(|t| t.lambda.abs().powf(p)).sum();
    Ok(AtomicDecomposition {
        residual,
        lambda_sum,
        lambda_constant: if hp_norm_p > 0.0 { lambda_sum / hp_norm_p } else { 0.0 },
        terms,
        classes: summaries,
        ..empty(0.0)
    })
}

fn blocks_weight(
    blocks1: &[BuildingBlockSet],
    blocks2: &[BuildingBlockSet],
    entries: &[(RectangleKey, Entry)],
    ell: [usize; 2],
) -> f64 {
    // Every block set of a factor shares c̄ and γ, so any entry gives the weight.
    let (_, (i, j, _)) = entries[0];
    blocks1[i].weight(ell[0]) * blocks2[j].weight(ell[1])
}

/// Rectangle atoms `λ⁻¹ Σ_{τ(R)=R̄} c·κ₁φ_{ℓ₁} ⊗ κ₂φ_{ℓ₂}`, dropping zeros.
fn assemble_cell(
    entries: &[(RectangleKey, Entry)],
    tau: &BTreeMap<RectangleKey, RectangleKey>,
    blocks: [&[BuildingBlockSet]; 2],
    ell: [usize; 2],
    base_lambda: f64,
    dims: (usize, usize),
) -> Vec<RectangleAtom> {
    let (n1, n2) = dims;
    // Group the second-factor sums per (target, first wavelet).
    let mut partial: BTreeMap<(RectangleKey, usize), Vec<f64>> = BTreeMap::new();
    for (key, (i, j, c)) in entries {
        let b1 = &blocks[0][*i];
        let b2 = &blocks[1][*j];
        if b1.block(ell[0]).is_none() {
            continue;
        }
        let Some(phi2) = b2.block(ell[1]) else { continue };
        let v = partial.entry((tau[key], *i)).or_insert_with(|| vec![0.0; n2]);
        let scale = c * b2.normalization;
        for (acc, &p2) in v.iter_mut().zip(phi2) {
            *acc += scale * p2;
        }
    }
    let mut atoms: BTreeMap<RectangleKey, GridFunction> = BTreeMap::new();
    for ((target, i), v) in partial {
        let b1 = &blocks[0][i];
        let phi1 = b1.block(ell[0]).expect("filtered above");
        let g = atoms.entry(target).or_insert_with(|| GridFunction::zeros(n1, n2));
        for x1 in 0..n1 {
            let a = b1.normalization * phi1[x1] / base_lambda;
            if a == 0.0 {
                continue;
            }
            for x2 in 0..n2 {
                g.values[x1 * n2 + x2] += a * v[x2];
            }
        }
    }
    atoms
        .into_iter()
        .filter(|(_, g)| !g.is_zero())
        .map(|(rectangle, values)| RectangleAtom { rectangle, values })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct StretchedSize {
    pub exponent: f64,
    /// Measured constant of the `m₁` sum.
    pub first: f64,
    /// Measured constant of the `m₂ ∖ m₁` sum.
    pub second: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AtomCertificate {
    pub support_ok: bool,
    /// `‖a‖_q / budget^{1/q−1/p}`.
    pub size_constant: f64,
    pub rectangle_supports_ok: bool,
    /// Largest one-variable integral of a rectangle atom, relative to
    /// `‖a_R‖_∞·μ(Xᵢ)`.
    pub cancellation: f64,
    pub cancellation_ok: bool,
    pub splitting_ok: bool,
    pub family_ok: bool,
    /// `(Σ ‖a_R‖_q^q)^{1/q} / budget^{1/q−1/p}` for `q ≥ 2`.
    pub rectangle_size_constant: Option<f64>,
    /// Stretch-weighted sums for `q < 2` at each exponent.
    pub stretched_sizes: Vec<StretchedSize>,
    pub failures: Vec<String>,
}

impl AtomCertificate {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

pub const CANCELLATION_TOLERANCE: f64 = 1e-10;

/// Check every atom condition; failures name the condition and rectangle.
pub fn verify_atom(atom: &ProductAtom) -> AtomCertificate {
    let weights = grid_weights(&atom.grids);
    let (n1, n2) = (weights[0].len(), weights[1].len());
    let systems = [atom.grids[0].as_ref(), atom.grids[1].as_ref()];
    let mut failures = Vec::new();

    let enlarged = ell_enlarge_on(systems, &atom.omega, atom.ell, atom.dilation);
    let mut support_ok = true;
    for (idx, &v) in atom.values.values.iter().enumerate() {
        if v != 0.0 && !enlarged.set.contains(idx / n2, idx % n2) {
            support_ok = false;
            failures.push(format!("support: value at ({}, {}) outside the enlarged set", idx / n2, idx % n2));
            break;
        }
    }

    let budget = atom.size_budget();
    let norm = lq_norm(weights, &atom.values, atom.q);
    let size_constant = if norm == 0.0 { 0.0 } else { norm / budget };
    if !size_constant.is_finite() {
        failures.push("size: nonzero atom on an empty open set".into());
    }

    let family = maximal_rectangles_on(systems, &atom.omega);
    let allowed: BTreeSet<RectangleKey> = if atom.q >= 2.0 {
        family.m_all.iter().copied().collect()
    } else {
        family.m1.iter().copied().chain(family.m2_prime()).collect()
    };
    let mut family_ok = true;
    let mut seen = BTreeSet::new();
    for r in &atom.rectangle_atoms {
        if !allowed.contains(&r.rectangle) || !seen.insert(r.rectangle) {
            family_ok = false;
            failures.push(format!("family: rectangle {:?} is not a distinct member", r.rectangle));
        }
    }

    let mut rectangle_supports_ok = true;
    let mut cancellation: f64 = 0.0;
    let totals = [atom.grids[0].space().total_measure(), atom.grids[1].space().total_measure()];
    let mut sum = GridFunction::zeros(n1, n2);
    for r in &atom.rectangle_atoms {
        sum.add_scaled(1.0, &r.values);
        let factor = [2f64.powi(atom.ell[0] as i32), 2f64.powi(atom.ell[1] as i32)];
        let b1 = systems[0].dilate_with(r.rectangle.q1, factor[0] * atom.dilation[0]);
        let b2 = systems[1].dilate_with(r.rectangle.q2, factor[1] * atom.dilation[1]);
        let outside = r.values.values.iter().enumerate().any(|(idx, &v)| {
            v != 0.0 && !(b1.contains(idx / n2) && b2.contains(idx % n2))
        });
        if outside {
            rectangle_supports_ok = false;
            failures.push(format!("rectangle support: atom on {:?} leaves its dilate", r.rectangle));
        }
        let scale = r.values.max_abs();
        if scale == 0.0 {
            continue;
        }
        let mut worst: f64 = 0.0;
        for x2 in 0..n2 {
            let s: f64 = (0..n1).map(|x1| r.values.get(x1, x2) * weights[0][x1]).sum();
            worst = worst.max(s.abs() / (scale * totals[0]));
        }
        for x1 in 0..n1 {
            let s: f64 = (0..n2).map(|x2| r.values.get(x1, x2) * weights[1][x2]).sum();
            worst = worst.max(s.abs() / (scale * totals[1]));
        }
        if worst > CANCELLATION_TOLERANCE {
            failures.push(format!(
                "cancellation: atom on {:?} has relative integral {worst:.3e}",
                r.rectangle
            ));
        }
        cancellation = cancellation.max(worst);
    }
    let cancellation_ok = cancellation <= CANCELLATION_TOLERANCE;

    let mut gap = atom.values.clone();
    gap.add_scaled(-1.0, &sum);
    let splitting_ok = gap.max_abs() <= 1e-12 * atom.values.max_abs().max(f64::MIN_POSITIVE);
    if !splitting_ok {
        failures.push(format!("splitting: rectangle atoms miss the atom by {:.3e}", gap.max_abs()));
    }

    let ratio = |s: f64| if s == 0.0 { 0.0 } else { s / budget };
    let powered: BTreeMap<RectangleKey, f64> = atom
        .rectangle_atoms
        .iter()
        .map(|r| (r.rectangle, lq_norm(weights, &r.values, atom.q).powf(atom.q)))
        .collect();
    let (rectangle_size_constant, stretched_sizes) = if atom.q >= 2.0 {
        let total: f64 = powered.values().sum();
        (Some(ratio(total.powf(1.0 / atom.q))), Vec::new())
    } else {
        let m2p: BTreeSet<RectangleKey> = family.m2_prime().into_iter().collect();
        let mut exps = vec![atom.q / (2.0 * atom.p), 0.5, 1.0, 2.0];
        exps.dedup();
        let sizes = exps
            .into_iter()
            .map(|exponent| {
                let mut first = 0.0;
                let mut second = 0.0;
                for (r, &v) in &powered {
                    if let Ok(hat) = family.stretch(crate::journe::Direction::First, *r) {
                        let t = systems[1].cube(r.q2).side_length / systems[1].cube(hat).side_length;
                        first += t.powf(exponent) * v;
                    } else if m2p.contains(r) {
                        let hat = family
                            .stretch(crate::journe::Direction::Second, *r)
                            .expect("m2 member");
                        let t = systems[0].cube(r.q1).side_length / systems[0].cube(hat).side_length;
                        second += t.powf(exponent) * v;
                    }
                }
                StretchedSize {
                    exponent,
                    first: ratio(first.powf(1.0 / atom.q)),
                    second: ratio(second.powf(1.0 / atom.q)),
                }
            })
            .collect();
        (None, sizes)
    };

    AtomCertificate {
        support_ok,
        size_constant,
        rectangle_supports_ok,
        cancellation,
        cancellation_ok,
        splitting_ok,
        family_ok,
        rectangle_size_constant,
        stretched_sizes,
        failures,
    }
}

/// `‖S(a)‖_{L^p}` on the pspace's wavelet grid, pairing `a` with each
/// product wavelet directly.
pub fn atom_hp_bound(pspace: &ProductSpace, atom: &ProductAtom, p: f64) -> Result<f64> {
    let (n1, n2) = pspace.dims();
    atom.values.check_shape(n1, n2)?;
    let [w1, w2] = pspace.weights();
    let wav1 = pspace.basis(0).wavelets();
    let wav2 = pspace.basis(1).wavelets();
    let mut coeffs = ProductCoefficients::zeros(wav1.len() + 1, wav2.len() + 1);
    for (i, u) in wav1.iter().enumerate() {
        for (j, v) in wav2.iter().enumerate() {
            let mut c = 0.0;
            for &a in &u.support {
                for &b in &v.support {
                    c += atom.values.get(a, b) * u.values[a] * v.values[b] * w1[a] * w2[b];
                }
            }
            coeffs.set(i + 1, j + 1, c);
        }
    }
    Ok(pspace.lp_norm(&square_function(pspace, &coeffs), p))
}

/// Weighted double centering on `rows × cols`: zero integral in each
/// variable for every value of the other.
pub fn double_center(weights: [&[f64]; 2], g: &mut GridFunction, rows: &[usize], cols: &[usize]) {
    let n2 = g.n2;
    let w_rows: f64 = rows.iter().map(|&a| weights[0][a]).sum();
    let w_cols: f64 = cols.iter().map(|&b| weights[1][b]).sum();
    let row_mean: Vec<f64> = rows
        .iter()
        .map(|&a| cols.iter().map(|&b| g.values[a * n2 + b] * weights[1][b]).sum::<f64>() / w_cols)
        .collect();
    let col_mean: Vec<f64> = cols
        .iter()
        .map(|&b| rows.iter().map(|&a| g.values[a * n2 + b] * weights[0][a]).sum::<f64>() / w_rows)
        .collect();
    let grand: f64 = rows
        .iter()
        .zip(&row_mean)
        .map(|(&a, m)| m * weights[0][a])
        .sum::<f64>()
        / w_rows;
    for (ra, &a) in rows.iter().enumerate() {
        for (cb, &b) in cols.iter().enumerate() {
            g.values[a * n2 + b] -= row_mean[ra] + col_mean[cb] - grand;
        }
    }
}

/// A random atom on the given grids: `Ω` is a union of a few random dyadic
/// rectangles, the atom's open set is its `ε₀`-enlargement, and each chosen
/// maximal rectangle carries a double-centered Gaussian block on the
/// `2^ℓ·D` dilates. The result is scaled to `C_q = 1`.
pub fn random_atom<R: Rng + ?Sized>(
    grids: [Arc<DyadicSystem>; 2],
    p: f64,
    q: f64,
    ell: [usize; 2],
    rng: &mut R,
) -> Result<ProductAtom> {
    check_exponents(p, q)?;
    let spaces = [grids[0].space().as_ref(), grids[1].space().as_ref()];
    let weights = grid_weights(&grids);
    let (n1, n2) = (spaces[0].len(), spaces[1].len());
    let cbar = [default_cbar(spaces[0].a0()), default_cbar(spaces[1].a0())];
    let dilation = [atom_dilation(&grids[0], cbar[0]), atom_dilation(&grids[1], cbar[1])];
    let eps0 = epsilon0_for(spaces);
    let ids = [grids[0].cube_ids(), grids[1].cube_ids()];
    for _ in 0..64 {
        let pieces = rng.random_range(1..=3);
        let mut mask = vec![false; n1 * n2];
        for _ in 0..pieces {
            let q1 = *ids[0].choose(rng).expect("nonempty grid");
            let q2 = *ids[1].choose(rng).expect("nonempty grid");
            for &a in &grids[0].cube(q1).members {
                for &b in &grids[1].cube(q2).members {
                    mask[a * n2 + b] = true;
                }
            }
        }
        let base = OpenSet::from_mask(weights, mask);
        let omega = enlarge_on(spaces, &base, eps0)?;
        let family = maximal_rectangles_on([&grids[0], &grids[1]], &omega);
        let mut chosen = family.m_all.clone();
        chosen.shuffle(rng);
        chosen.truncate(rng.random_range(1..=3));
        chosen.sort();
        let mut rectangle_atoms = Vec::new();
        let factor = [2f64.powi(ell[0] as i32), 2f64.powi(ell[1] as i32)];
        for rectangle in chosen {
            let b1 = grids[0].dilate_with(rectangle.q1, factor[0] * dilation[0]);
            let b2 = grids[1].dilate_with(rectangle.q2, factor[1] * dilation[1]);
            if b1.members.len() < 2 || b2.members.len() < 2 {
                continue;
            }
            let mut g = GridFunction::zeros(n1, n2);
            for &a in &b1.members {
                for &b in &b2.members {
                    g.values[a * n2 + b] = rng.sample(StandardNormal);
                }
            }
            double_center(weights, &mut g, &b1.members, &b2.members);
            rectangle_atoms.push(RectangleAtom { rectangle, values: g });
        }
        if rectangle_atoms.is_empty() {
            continue;
        }
        let mut values = GridFunction::zeros(n1, n2);
        for r in &rectangle_atoms {
            values.add_scaled(1.0, &r.values);
        }
        let mut atom = ProductAtom {
            values,
            omega,
            ell,
            p,
            q,
            dilation,
            grids: grids.clone(),
            rectangle_atoms,
        };
        let norm = lq_norm(weights, &atom.values, q);
        if norm == 0.0 {
            continue;
        }
        let t = atom.size_budget() / norm;
        atom.values = atom.values.scaled(t);
        for r in &mut atom.rectangle_atoms {
            r.values = r.values.scaled(t);
        }
        return Ok(atom);
    }
    Ok(ProductAtom::zero(grids, p, q, dilation))
}

#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceRow {
    pub hp_norm_p: f64,
    pub lambda_sum: f64,
    pub terms: usize,
    /// `max ‖S(a)‖_p^p` over this function's atoms.
    pub atom_bound_p: f64,
    /// `‖f‖_{H^p}^p / Σ|λ|^p`.
    pub lower_ratio: f64,
    /// `Σ|λ|^p / ‖f‖_{H^p}^p`.
    pub upper_ratio: f64,
    /// `lower_ratio ≤ atom_bound_p`, which follows from `p ≤ 1` sublinearity.
    pub converse_ok: bool,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceReport {
    pub p: f64,
    pub q: f64,
    pub rows: Vec<EquivalenceRow>,
    pub lower: [f64; 2],
    pub upper: [f64; 2],
}

pub fn equivalence_report(
    pspace: &ProductSpace,
    corpus: &[GridFunction],
    p: f64,
    q: f64,
    gamma: [f64; 2],
) -> Result<EquivalenceReport> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let rows: Vec<EquivalenceRow> = corpus
        .par_iter()
        .map(|f| {
            let dec = atomic_decompose(pspace, f, p, q, gamma)?;
            let mut atom_bound_p: f64 = 0.0;
            for t in &dec.terms {
                atom_bound_p = atom_bound_p.max(atom_hp_bound(pspace, &t.atom, p)?.powf(p));
            }
            let lower_ratio = if dec.lambda_sum > 0.0 { dec.hp_norm_p / dec.lambda_sum } else { 0.0 };
            let upper_ratio = if dec.hp_norm_p > 0.0 { dec.lambda_sum / dec.hp_norm_p } else { 0.0 };
            Ok(EquivalenceRow {
                hp_norm_p: dec.hp_norm_p,
                lambda_sum: dec.lambda_sum,
                terms: dec.terms.len(),
                atom_bound_p,
                lower_ratio,
                upper_ratio,
                converse_ok: lower_ratio <= atom_bound_p * (1.0 + 1e-9),
                residual: dec.residual,
            })
        })
        .collect::<Result<_>>()?;
    let span = |v: &mut dyn Iterator<Item = f64>| {
        v.fold([f64::INFINITY, 0.0f64], |[lo, hi], x| [lo.min(x), hi.max(x)])
    };
    Ok(EquivalenceReport {
        p,
        q,
        lower: span(&mut rows.iter().map(|r| r.lower_ratio)),
        upper: span(&mut rows.iter().map(|r| r.upper_ratio)),
        rows,
    })
}
