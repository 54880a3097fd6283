//! Maximal dyadic rectangles of an open set, the stretch maps `R ↦ Q̂`, and
//! the weighted covering sums.

use std::collections::HashSet;

use serde::Serialize;

use crate::dyadic::{CubeId, DyadicSystem};
use crate::error::{Error, Result};
use crate::grid::OpenSet;
use crate::maximal::contained_rectangles;
use crate::product::{ProductSpace, RectangleKey};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    First,
    Second,
    Both,
}

/// Rectangles of `omega_ref`, maximal in each direction.
///
/// A cube is compared with its parent index, so a cube whose parent has the
/// same member set is never maximal; each set appears once per family.
#[derive(Debug, Clone, Serialize)]
pub struct MaximalRectangleFamily {
    pub omega_ref: OpenSet,
    pub contained: Vec<RectangleKey>,
    pub m_all: Vec<RectangleKey>,
    pub m1: Vec<RectangleKey>,
    pub m2: Vec<RectangleKey>,
    /// `Q̂₂` for each member of `m1`, aligned.
    pub stretch1: Vec<CubeId>,
    /// `Q̂₁` for each member of `m2`, aligned.
    pub stretch2: Vec<CubeId>,
}

impl MaximalRectangleFamily {
    pub fn family(&self, direction: Direction) -> &[RectangleKey] {
        match direction {
            Direction::First => &self.m1,
            Direction::Second => &self.m2,
            Direction::Both => &self.m_all,
        }
    }

    /// Members of `m2` that are not already in `m1`.
    pub fn m2_prime(&self) -> Vec<RectangleKey> {
        let first: HashSet<_> = self.m1.iter().collect();
        self.m2.iter().copied().filter(|r| !first.contains(r)).collect()
    }

    /// `Q̂` for `R`: the second-factor stretch when `direction` is `First`,
    /// the first-factor stretch when `Second`.
    pub fn stretch(&self, direction: Direction, r: RectangleKey) -> Result<CubeId> {
        let (members, stretch) = match direction {
            Direction::First => (&self.m1, &self.stretch1),
            Direction::Second => (&self.m2, &self.stretch2),
            Direction::Both => {
                return Err(Error::InvalidParameter("stretch needs a single direction".into()))
            }
        };
        members
            .binary_search(&r)
            .map(|i| stretch[i])
            .map_err(|_| Error::NotInFamily)
    }
}

pub fn maximal_rectangles(pspace: &ProductSpace, omega: &OpenSet) -> MaximalRectangleFamily {
    maximal_rectangles_on([pspace.system(0), pspace.system(1)], omega)
}

pub fn maximal_rectangles_on(systems: [&DyadicSystem; 2], omega: &OpenSet) -> MaximalRectangleFamily {
    let contained = contained_rectangles(systems, omega);
    let inside: HashSet<RectangleKey> = contained.iter().copied().collect();
    let grows = |r: &RectangleKey, factor: usize| -> bool {
        let bigger = match factor {
            0 => systems[0].parent(r.q1).map(|q1| RectangleKey { q1, q2: r.q2 }),
            _ => systems[1].parent(r.q2).map(|q2| RectangleKey { q1: r.q1, q2 }),
        };
        bigger.is_some_and(|b| inside.contains(&b))
    };
    let m1: Vec<RectangleKey> = contained.iter().copied().filter(|r| !grows(r, 0)).collect();
    let m2: Vec<RectangleKey> = contained.iter().copied().filter(|r| !grows(r, 1)).collect();
    let m_all: Vec<RectangleKey> = m1.iter().copied().filter(|r| !grows(r, 1)).collect();

    let weights = [systems[0].space().weights(), systems[1].space().weights()];
    let overlap = |c1: &[usize], c2: &[usize]| -> (f64, f64) {
        let mut inside = 0.0;
        let mut total = 0.0;
        for &a in c1 {
            for &b in c2 {
                let m = weights[0][a] * weights[1][b];
                total += m;
                if omega.contains(a, b) {
                    inside += m;
                }
            }
        }
        (inside, total)
    };
    // Coarsest ancestor passing the half-measure test.
    let stretch = |fixed: &[usize], chain: Vec<CubeId>, sys: &DyadicSystem, first_fixed: bool| -> CubeId {
        let mut best = chain[0];
        for &a in &chain {
            let members = &sys.cube(a).members;
            let (inside, total) = if first_fixed {
                overlap(fixed, members)
            } else {
                overlap(members, fixed)
            };
            if inside > total / 2.0 {
                best = a;
            }
        }
        best
    };
    let stretch1 = m1
        .iter()
        .map(|r| {
            let fixed = &systems[0].cube(r.q1).members;
            stretch(fixed, systems[1].ancestors(r.q2), systems[1], true)
        })
        .collect();
    let stretch2 = m2
        .iter()
        .map(|r| {
            let fixed = &systems[1].cube(r.q2).members;
            stretch(fixed, systems[0].ancestors(r.q1), systems[0], false)
        })
        .collect();
    MaximalRectangleFamily {
        omega_ref: omega.clone(),
        contained,
        m_all,
        m1,
        m2,
        stretch1,
        stretch2,
    }
}

/// Every contained rectangle sits inside some member of `family`.
pub fn covers_contained(pspace: &ProductSpace, family: &MaximalRectangleFamily, direction: Direction) -> bool {
    let members = family.family(direction);
    family
        .contained
        .iter()
        .all(|&r| members.iter().any(|&m| pspace.rect_contains(m, r)))
}

#[derive(Debug, Clone, Serialize)]
pub struct JourneReport {
    pub measure: f64,
    pub exponent: f64,
    /// `Σ_{m₁} μ(R)(ℓ(Q₂)/ℓ(Q̂₂))^δ`.
    pub l1: f64,
    /// `Σ_{m₂} μ(R)(ℓ(Q₁)/ℓ(Q̂₁))^δ`.
    pub l2: f64,
    pub c1: f64,
    pub c2: f64,
    pub m1_len: usize,
    pub m2_len: usize,
    /// `C₁/c₁` of each factor's grid.
    pub dilation_ratios: [f64; 2],
}

pub fn journe_check(pspace: &ProductSpace, omega: &OpenSet, exponent: f64) -> Result<JourneReport> {
    let family = maximal_rectangles(pspace, omega);
    journe_sums([pspace.system(0), pspace.system(1)], &family, exponent)
}

pub fn journe_sums(
    systems: [&DyadicSystem; 2],
    family: &MaximalRectangleFamily,
    exponent: f64,
) -> Result<JourneReport> {
    if !(exponent > 0.0 && exponent.is_finite()) {
        return Err(Error::InvalidParameter(format!("exponent {exponent} must be positive")));
    }
    let measure = family.omega_ref.measure;
    if measure <= 0.0 {
        return Err(Error::EmptyOpenSet);
    }
    let rect_measure = |r: &RectangleKey| systems[0].cube(r.q1).measure * systems[1].cube(r.q2).measure;
    let l1: f64 = family
        .m1
        .iter()
        .zip(&family.stretch1)
        .map(|(r, &hat)| {
            let ratio = systems[1].cube(r.q2).side_length / systems[1].cube(hat).side_length;
            rect_measure(r) * ratio.powf(exponent)
        })
        .sum();
    let l2: f64 = family
        .m2
        .iter()
        .zip(&family.stretch2)
        .map(|(r, &hat)| {
            let ratio = systems[0].cube(r.q1).side_length / systems[0].cube(hat).side_length;
            rect_measure(r) * ratio.powf(exponent)
        })
        .sum();
    Ok(JourneReport {
        measure,
        exponent,
        l1,
        l2,
        c1: l1 / measure,
        c2: l2 / measure,
        m1_len: family.m1.len(),
        m2_len: family.m2.len(),
        dilation_ratios: [
            systems[0].constants().dilation_ratio(),
            systems[1].constants().dilation_ratio(),
        ],
    })
}
