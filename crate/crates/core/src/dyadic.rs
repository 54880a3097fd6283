//! Nested dyadic cube systems built from greedy maximal nets.
//!
//! Nets are built coarse to fine, each one seeded with the previous level's
//! net, so `net(k) ⊆ net(k+1)` always. A level-`(k+1)` cube hangs under the
//! nearest level-`k` center and cube member sets are inherited bottom-up,
//! which makes nesting and disjointness hold by construction.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{Ball, FiniteSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CubeId {
    pub level: i32,
    pub index: usize,
}

#[derive(Debug, Clone)]
pub struct Cube {
    pub id: CubeId,
    pub center: usize,
    /// Sorted member point ids.
    pub members: Vec<usize>,
    pub measure: f64,
    /// Index of the parent cube one level up.
    pub parent: Option<usize>,
    /// Indices of the child cubes one level down, in net order.
    pub children: Vec<usize>,
    pub side_length: f64,
}

impl Cube {
    pub fn contains(&self, x: usize) -> bool {
        self.members.binary_search(&x).is_ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridMode {
    /// Enforces `δ ≤ 10⁻³·a0⁻¹⁰`, the wavelet reference-grid regime.
    Reference,
    /// Any `δ ∈ (0,1)`; non-conformance is reported, not rejected.
    Desk,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BuildOptions {
    pub delta: Option<f64>,
    pub mode: GridMode,
    /// Shuffle the greedy scan order with this seed (regular families).
    pub order_seed: Option<u64>,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            delta: None,
            mode: GridMode::Desk,
            order_seed: None,
        }
    }
}

impl BuildOptions {
    pub fn desk(delta: f64) -> Self {
        BuildOptions {
            delta: Some(delta),
            ..Default::default()
        }
    }
}

/// Largest `δ` the reference-grid mode accepts.
pub fn reference_delta(a0: f64) -> f64 {
    (1e-3 * a0.powi(-10)).min(0.5)
}

/// Largest `δ` for which `12·a0³·C0·δ ≤ c0` with `c0 = C0 = 1`, the regime in
/// which the inner/outer ball certificate is guaranteed.
pub fn admissible_delta(a0: f64) -> f64 {
    (1.0 / (12.0 * a0.powi(3))).min(0.5)
}

/// Separation, covering and inner/outer ball constants of a system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructuralConstants {
    /// `c0`: net points at level `k` are `c0·δ^k`-separated.
    pub separation: f64,
    /// `C0`: every point lies within `C0·δ^k` of a level-`k` net point.
    pub covering: f64,
    /// `c1 = (3a0²)⁻¹c0`: `B(z, c1·δ^k) ⊆ Q`.
    pub inner: f64,
    /// `C1 = 2a0·C0`: `Q ⊆ B(z, C1·δ^k)`.
    pub outer: f64,
}

impl StructuralConstants {
    pub fn certified(a0: f64) -> Self {
        StructuralConstants {
            separation: 1.0,
            covering: 1.0,
            inner: 1.0 / (3.0 * a0 * a0),
            outer: 2.0 * a0,
        }
    }

    pub fn dilation_ratio(&self) -> f64 {
        self.outer / self.inner
    }
}

/// Bounds every member of a regular family must respect; functions of `a0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularFamilyPolicy {
    pub max_outer_dilation: f64,
    pub max_dilation_ratio: f64,
}

impl RegularFamilyPolicy {
    pub fn for_a0(a0: f64) -> Self {
        RegularFamilyPolicy {
            max_outer_dilation: 6.0 * a0.powi(4),
            max_dilation_ratio: 36.0 * a0.powi(9),
        }
    }

    pub fn admits(&self, constants: &StructuralConstants) -> bool {
        constants.outer <= self.max_outer_dilation
            && constants.dilation_ratio() <= self.max_dilation_ratio
    }
}

#[derive(Debug, Clone)]
struct Level {
    net: Vec<usize>,
    cubes: Vec<Cube>,
    point_cube: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct DyadicSystem {
    space: Arc<FiniteSpace>,
    delta: f64,
    k_min: i32,
    k_max: i32,
    mode: GridMode,
    order_seed: Option<u64>,
    constants: StructuralConstants,
    levels: Vec<Level>,
    offsets: Vec<usize>,
}

/// Greedy maximal `δ^k`-separated superset of `seed_net`, scanning points
/// in ascending id.
pub fn build_net(
    space: &FiniteSpace,
    delta: f64,
    k: i32,
    seed_net: &[usize],
) -> Result<Vec<usize>> {
    let order: Vec<usize> = (0..space.len()).collect();
    build_net_ordered(space, delta, k, seed_net, &order)
}

pub fn build_net_ordered(
    space: &FiniteSpace,
    delta: f64,
    k: i32,
    seed_net: &[usize],
    order: &[usize],
) -> Result<Vec<usize>> {
    check_delta(delta)?;
    let scale = delta.powi(k);
    for (i, &a) in seed_net.iter().enumerate() {
        for &b in &seed_net[i + 1..] {
            let dist = space.d(a, b);
            if dist < scale {
                return Err(Error::SeedNotSeparated { scale, a, b, dist });
            }
        }
    }
    let mut net = seed_net.to_vec();
    let mut in_net = vec![false; space.len()];
    for &z in &net {
        in_net[z] = true;
    }
    for &x in order {
        if in_net[x] {
            continue;
        }
        if net.iter().all(|&z| space.d(x, z) >= scale) {
            net.push(x);
            in_net[x] = true;
        }
    }
    Ok(net)
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::DeltaOutOfRange(delta))
    }
}

/// Level range `[k_min, k_max]`: `k_min` is the largest `k` with
/// `δ^k > diameter` and `k_max` the smallest with `δ^k < min distance`.
fn level_range(space: &FiniteSpace, delta: f64) -> (i32, i32) {
    if space.len() == 1 {
        return (0, 0);
    }
    let diam = space.diameter();
    let mut k_min = (diam.ln() / delta.ln()).floor() as i32;
    while delta.powi(k_min) <= diam {
        k_min -= 1;
    }
    while delta.powi(k_min + 1) > diam {
        k_min += 1;
    }
    let min_d = space.min_distance();
    let mut k_max = (min_d.ln() / delta.ln()).ceil() as i32;
    while delta.powi(k_max) >= min_d {
        k_max += 1;
    }
    while delta.powi(k_max - 1) < min_d {
        k_max -= 1;
    }
    (k_min, k_max)
}

impl DyadicSystem {
    pub fn build(space: Arc<FiniteSpace>, options: BuildOptions) -> Result<Self> {
        let a0 = space.a0();
        let delta = match (options.mode, options.delta) {
            (GridMode::Reference, None) => reference_delta(a0),
            (GridMode::Reference, Some(d)) => {
                check_delta(d)?;
                if d > reference_delta(a0) {
                    return Err(Error::InvalidParameter(format!(
                        "reference-grid mode needs delta <= {:e}, got {d}",
                        reference_delta(a0)
                    )));
                }
                d
            }
            (GridMode::Desk, None) => admissible_delta(a0),
            (GridMode::Desk, Some(d)) => d,
        };
        check_delta(delta)?;
        let (k_min, k_max) = level_range(&space, delta);

        let mut order: Vec<usize> = (0..space.len()).collect();
        if let Some(seed) = options.order_seed {
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        }
        let mut nets = Vec::with_capacity((k_max - k_min + 1) as usize);
        let mut seed: Vec<usize> = Vec::new();
        for k in k_min..=k_max {
            let net = build_net_ordered(&space, delta, k, &seed, &order)?;
            seed = net.clone();
            nets.push(net);
        }
        let parents = nearest_parents(&space, &nets);
        let constants = StructuralConstants::certified(a0);
        Self::assemble(space, delta, k_min, options.mode, options.order_seed, constants, nets, parents)
    }

    /// Derive cubes from nets and parent arrays. `parents[i][j]` is the
    /// parent index of cube `j` at level `k_min + i` (empty for the top).
    #[allow(clippy::too_many_arguments)]
    fn assemble(
        space: Arc<FiniteSpace>,
        delta: f64,
        k_min: i32,
        mode: GridMode,
        order_seed: Option<u64>,
        constants: StructuralConstants,
        nets: Vec<Vec<usize>>,
        parents: Vec<Vec<usize>>,
    ) -> Result<Self> {
        let n = space.len();
        let depth = nets.len();
        let k_max = k_min + depth as i32 - 1;
        if nets[0].len() != 1 {
            return Err(Error::Construction(format!(
                "top level has {} cubes",
                nets[0].len()
            )));
        }
        if nets[depth - 1].len() != n {
            return Err(Error::Construction(format!(
                "finest level has {} cubes for {n} points",
                nets[depth - 1].len()
            )));
        }
        let mut levels: Vec<Level> = Vec::with_capacity(depth);
        for (i, net) in nets.into_iter().enumerate() {
            let k = k_min + i as i32;
            let cubes = net
                .iter()
                .enumerate()
                .map(|(index, &center)| Cube {
                    id: CubeId { level: k, index },
                    center,
                    members: Vec::new(),
                    measure: 0.0,
                    parent: if i == 0 { None } else { Some(parents[i][index]) },
                    children: Vec::new(),
                    side_length: delta.powi(k),
                })
                .collect();
            levels.push(Level {
                net,
                cubes,
                point_cube: vec![usize::MAX; n],
            });
        }
        for i in 1..depth {
            let (upper, lower) = levels.split_at_mut(i);
            let upper = &mut upper[i - 1];
            for (j, cube) in lower[0].cubes.iter().enumerate() {
                let p = cube.parent.unwrap();
                if p >= upper.cubes.len() {
                    return Err(Error::Construction(format!(
                        "cube {j} at level {} has parent {p} out of range",
                        cube.id.level
                    )));
                }
                upper.cubes[p].children.push(j);
            }
        }
        // Finest cubes are singletons; coarser ones inherit.
        {
            let finest = &mut levels[depth - 1];
            for cube in finest.cubes.iter_mut() {
                cube.members = vec![cube.center];
                cube.measure = space.weight(cube.center);
                finest.point_cube[cube.center] = cube.id.index;
            }
        }
        for i in (0..depth - 1).rev() {
            let (upper, lower) = levels.split_at_mut(i + 1);
            let upper = &mut upper[i];
            let lower = &lower[0];
            for cube in upper.cubes.iter_mut() {
                let mut members: Vec<usize> = cube
                    .children
                    .iter()
                    .flat_map(|&c| lower.cubes[c].members.iter().copied())
                    .collect();
                members.sort_unstable();
                for &x in &members {
                    upper.point_cube[x] = cube.id.index;
                }
                cube.measure = space.measure_of(&members);
                cube.members = members;
            }
        }
        let offsets = levels
            .iter()
            .scan(0, |acc, l| {
                let start = *acc;
                *acc += l.cubes.len();
                Some(start)
            })
            .collect();
        let system = DyadicSystem {
            space,
            delta,
            k_min,
            k_max,
            mode,
            order_seed,
            constants,
            levels,
            offsets,
        };
        system.check_exact()?;
        Ok(system)
    }

    pub fn space(&self) -> &Arc<FiniteSpace> {
        &self.space
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn k_min(&self) -> i32 {
        self.k_min
    }

    pub fn k_max(&self) -> i32 {
        self.k_max
    }

    pub fn mode(&self) -> GridMode {
        self.mode
    }

    pub fn order_seed(&self) -> Option<u64> {
        self.order_seed
    }

    pub fn constants(&self) -> &StructuralConstants {
        &self.constants
    }

    pub fn scale(&self, k: i32) -> f64 {
        self.delta.powi(k)
    }

    pub fn level_range(&self) -> std::ops::RangeInclusive<i32> {
        self.k_min..=self.k_max
    }

    fn level(&self, k: i32) -> &Level {
        &self.levels[(k - self.k_min) as usize]
    }

    pub fn net(&self, k: i32) -> &[usize] {
        &self.level(k).net
    }

    pub fn cubes(&self, k: i32) -> &[Cube] {
        &self.level(k).cubes
    }

    pub fn cube(&self, id: CubeId) -> &Cube {
        &self.level(id.level).cubes[id.index]
    }

    pub fn top(&self) -> CubeId {
        CubeId {
            level: self.k_min,
            index: 0,
        }
    }

    pub fn all_cubes(&self) -> impl Iterator<Item = &Cube> {
        self.levels.iter().flat_map(|l| l.cubes.iter())
    }

    /// Position of `id` in the coarse-to-fine enumeration of all cubes.
    pub fn flat(&self, id: CubeId) -> usize {
        self.offsets[(id.level - self.k_min) as usize] + id.index
    }

    /// All cube ids, coarse to fine, in flat order.
    pub fn cube_ids(&self) -> Vec<CubeId> {
        self.all_cubes().map(|c| c.id).collect()
    }

    pub fn cube_count(&self) -> usize {
        self.levels.iter().map(|l| l.cubes.len()).sum()
    }

    /// The level-`k` cube containing `x`.
    pub fn cube_at(&self, k: i32, x: usize) -> CubeId {
        CubeId {
            level: k,
            index: self.level(k).point_cube[x],
        }
    }

    pub fn parent(&self, id: CubeId) -> Option<CubeId> {
        self.cube(id).parent.map(|index| CubeId {
            level: id.level - 1,
            index,
        })
    }

    /// `id` and its ancestors, finest first.
    pub fn ancestors(&self, id: CubeId) -> Vec<CubeId> {
        let mut chain = vec![id];
        let mut cur = id;
        while let Some(p) = self.parent(cur) {
            chain.push(p);
            cur = p;
        }
        chain
    }

    /// Set containment `inner ⊆ outer`.
    pub fn contains(&self, outer: CubeId, inner: CubeId) -> bool {
        let point_cube = &self.level(outer.level).point_cube;
        self.cube(inner)
            .members
            .iter()
            .all(|&x| point_cube[x] == outer.index)
    }

    /// `B(z, λ·C1·δ^k)` for the certified outer constant `C1`.
    pub fn dilate_cube(&self, id: CubeId, lambda: f64) -> Result<Ball> {
        if !(lambda >= 1.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "dilation {lambda} must be a finite real >= 1"
            )));
        }
        Ok(self.dilate_with(id, lambda * self.constants.outer))
    }

    /// `B(z, multiplier·δ^k)`.
    pub fn dilate_with(&self, id: CubeId, multiplier: f64) -> Ball {
        let cube = self.cube(id);
        self.space.ball(cube.center, multiplier * cube.side_length)
    }

    fn check_exact(&self) -> Result<()> {
        let n = self.space.len();
        let total = self.space.total_measure();
        for level in &self.levels {
            let mut seen = vec![false; n];
            for cube in &level.cubes {
                for &x in &cube.members {
                    if seen[x] {
                        return Err(Error::Construction(format!(
                            "point {x} lies in two cubes at level {}",
                            cube.id.level
                        )));
                    }
                    seen[x] = true;
                }
                if cube.members.is_empty() || cube.children.is_empty() && cube.id.level < self.k_max {
                    return Err(Error::Construction(format!(
                        "cube {:?} is empty or childless",
                        cube.id
                    )));
                }
            }
            if let Some(x) = seen.iter().position(|s| !s) {
                return Err(Error::Construction(format!("point {x} is uncovered")));
            }
            let sum: f64 = level.cubes.iter().map(|c| c.measure).sum();
            if (sum - total).abs() > 1e-12 * total {
                return Err(Error::Construction(format!(
                    "cube measures sum to {sum}, total is {total}"
                )));
            }
        }
        // Nesting against every coarser level, not only the parent.
        for (fine_i, fine) in self.levels.iter().enumerate() {
            for coarse in &self.levels[..fine_i] {
                for cube in &fine.cubes {
                    let owner = coarse.point_cube[cube.members[0]];
                    if cube.members.iter().any(|&x| coarse.point_cube[x] != owner) {
                        return Err(Error::Construction(format!(
                            "cube {:?} straddles two coarser cubes",
                            cube.id
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn verify(&self) -> Result<SystemReport> {
        verify_system(self)
    }

    pub fn export(&self) -> SystemExport {
        SystemExport {
            delta: self.delta,
            k_min: self.k_min,
            k_max: self.k_max,
            mode: self.mode,
            order_seed: self.order_seed,
            constants: self.constants,
            levels: self
                .levels
                .iter()
                .map(|l| LevelExport {
                    level: l.cubes[0].id.level,
                    net: l.net.clone(),
                    parents: l.cubes.iter().filter_map(|c| c.parent).collect(),
                })
                .collect(),
        }
    }

    pub fn import(space: Arc<FiniteSpace>, export: &SystemExport) -> Result<Self> {
        let depth = (export.k_max - export.k_min + 1) as usize;
        if export.levels.len() != depth {
            return Err(Error::Import(format!(
                "{} levels listed for range {}..={}",
                export.levels.len(),
                export.k_min,
                export.k_max
            )));
        }
        for (i, l) in export.levels.iter().enumerate() {
            if l.level != export.k_min + i as i32 {
                return Err(Error::Import(format!("level {} out of order", l.level)));
            }
            let expected = if i == 0 { 0 } else { l.net.len() };
            if l.parents.len() != expected {
                return Err(Error::Import(format!(
                    "level {} has {} parents for {} cubes",
                    l.level,
                    l.parents.len(),
                    l.net.len()
                )));
            }
            if let Some(&z) = l.net.iter().find(|&&z| z >= space.len()) {
                return Err(Error::Import(format!("net point {z} out of range")));
            }
        }
        check_delta(export.delta)?;
        let nets = export.levels.iter().map(|l| l.net.clone()).collect();
        let parents = export.levels.iter().map(|l| l.parents.clone()).collect();
        Self::assemble(
            space,
            export.delta,
            export.k_min,
            export.mode,
            export.order_seed,
            export.constants,
            nets,
            parents,
        )
        .map_err(|e| Error::Import(e.to_string()))
    }
}

/// Parent of each level-`(k+1)` net point: the nearest level-`k` net point,
/// ties going to the earlier one in net order.
fn nearest_parents(space: &FiniteSpace, nets: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut parents = vec![Vec::new()];
    for w in nets.windows(2) {
        let (coarse, fine) = (&w[0], &w[1]);
        parents.push(
            fine.iter()
                .map(|&c| {
                    let mut best = 0;
                    for (j, &z) in coarse.iter().enumerate() {
                        if space.d(c, z) < space.d(c, coarse[best]) {
                            best = j;
                        }
                    }
                    best
                })
                .collect(),
        );
    }
    parents
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelExport {
    pub level: i32,
    pub net: Vec<usize>,
    pub parents: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemExport {
    pub delta: f64,
    pub k_min: i32,
    pub k_max: i32,
    pub mode: GridMode,
    pub order_seed: Option<u64>,
    pub constants: StructuralConstants,
    pub levels: Vec<LevelExport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DilateDoubling {
    pub lambda: f64,
    /// Largest `μ(λQ)/μ(Q)` over all cubes.
    pub max_ratio: f64,
    /// `cmu·(λ·C1/c1)^ω`.
    pub bound: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SystemReport {
    pub delta: f64,
    pub k_min: i32,
    pub k_max: i32,
    pub mode: GridMode,
    pub cube_count: usize,
    pub nested: bool,
    pub disjoint_union: bool,
    pub separated: bool,
    /// Largest `min_z d(x, z)/δ^k` over points and levels.
    pub measured_covering: f64,
    /// Smallest `min_{x∉Q} d(z, x)/δ^k`; absent when every cube is the whole space.
    pub measured_inner: Option<f64>,
    /// Largest `max_{x∈Q} d(z, x)/δ^k`.
    pub measured_outer: f64,
    pub certified: StructuralConstants,
    pub certificate_holds: bool,
    /// `12·a0³·C0·δ ≤ c0`: the regime where the certificate is proved.
    pub admissible_delta: bool,
    pub reference_grid: bool,
    pub regular_family_policy: RegularFamilyPolicy,
    pub regular_family_ok: bool,
    pub dilate_doubling: Vec<DilateDoubling>,
    /// Outer and inner constants of the randomized construction, for comparison.
    pub randomized_outer: f64,
    pub randomized_inner: f64,
}

impl SystemReport {
    pub fn exact_ok(&self) -> bool {
        self.nested && self.disjoint_union && self.separated && self.measured_covering < self.certified.covering
    }
}

pub fn verify_system(system: &DyadicSystem) -> Result<SystemReport> {
    system.check_exact()?;
    let space = system.space();
    let a0 = space.a0();
    let certified = system.constants;

    let mut separated = true;
    let mut measured_covering: f64 = 0.0;
    let mut measured_inner: Option<f64> = None;
    let mut measured_outer: f64 = 0.0;
    for k in system.level_range() {
        let scale = system.scale(k);
        let net = system.net(k);
        for (i, &a) in net.iter().enumerate() {
            for &b in &net[i + 1..] {
                if space.d(a, b) < certified.separation * scale {
                    separated = false;
                }
            }
        }
        for x in 0..space.len() {
            let nearest = net.iter().map(|&z| space.d(x, z)).fold(f64::INFINITY, f64::min);
            measured_covering = measured_covering.max(nearest / scale);
        }
        for cube in system.cubes(k) {
            let row = space.row(cube.center);
            let mut outer: f64 = 0.0;
            let mut inner = f64::INFINITY;
            for (x, &d) in row.iter().enumerate() {
                if cube.contains(x) {
                    outer = outer.max(d);
                } else {
                    inner = inner.min(d);
                }
            }
            measured_outer = measured_outer.max(outer / scale);
            if inner.is_finite() {
                let r = inner / scale;
                measured_inner = Some(measured_inner.map_or(r, |m| m.min(r)));
            }
        }
    }
    // Containment is strict on the outer side: Q ⊆ B(z, C1 δ^k) needs d < C1 δ^k.
    let certificate_holds = measured_outer < certified.outer
        && measured_inner.is_none_or(|m| m >= certified.inner);
    let admissible = 12.0 * a0.powi(3) * certified.covering * system.delta <= certified.separation;
    let reference_grid = system.delta <= reference_delta(a0);
    let policy = RegularFamilyPolicy::for_a0(a0);

    let ratio = certified.dilation_ratio();
    let dilate_doubling = [1.0, 2.0, 4.0]
        .into_iter()
        .map(|lambda| {
            let max_ratio = system
                .all_cubes()
                .map(|c| {
                    space.ball_measure(c.center, lambda * certified.outer * c.side_length) / c.measure
                })
                .fold(0.0, f64::max);
            let bound = space.cmu() * (lambda * ratio).powf(space.omega());
            DilateDoubling {
                lambda,
                max_ratio,
                bound,
                holds: max_ratio <= bound * (1.0 + 1e-12),
            }
        })
        .collect::<Vec<_>>();

    if admissible && !certificate_holds {
        return Err(Error::Construction(format!(
            "inner/outer ball certificate fails at admissible delta {}: measured inner {:?}, outer {}",
            system.delta, measured_inner, measured_outer
        )));
    }
    if !admissible && !certificate_holds {
        log::warn!(
            "delta = {} exceeds the admissible bound {:e}; inner/outer certificate does not hold",
            system.delta,
            admissible_delta(a0)
        );
    }
    let report = SystemReport {
        delta: system.delta,
        k_min: system.k_min,
        k_max: system.k_max,
        mode: system.mode,
        cube_count: system.cube_count(),
        nested: true,
        disjoint_union: true,
        separated,
        measured_covering,
        measured_inner,
        measured_outer,
        certified,
        certificate_holds,
        admissible_delta: admissible,
        reference_grid,
        regular_family_policy: policy,
        regular_family_ok: policy.admits(&certified),
        dilate_doubling,
        randomized_outer: 6.0 * a0.powi(4),
        randomized_inner: a0.powi(-5) / 6.0,
    };
    if !report.exact_ok() {
        return Err(Error::Construction(format!(
            "net separation or covering violated (covering {})",
            report.measured_covering
        )));
    }
    Ok(report)
}

/// Systems on one space sharing the regular-family bounds.
#[derive(Debug, Clone)]
pub struct RegularFamily {
    pub policy: RegularFamilyPolicy,
    pub systems: Vec<Arc<DyadicSystem>>,
}

impl RegularFamily {
    pub fn new(a0: f64) -> Self {
        RegularFamily {
            policy: RegularFamilyPolicy::for_a0(a0),
            systems: Vec::new(),
        }
    }

    pub fn register(&mut self, system: Arc<DyadicSystem>) -> Result<()> {
        if !self.policy.admits(system.constants()) {
            return Err(Error::InvalidParameter(format!(
                "system constants {:?} exceed the family policy {:?}",
                system.constants(),
                self.policy
            )));
        }
        self.systems.push(system);
        Ok(())
    }

    /// Shuffled-greedy systems, one per seed.
    pub fn generate(space: &Arc<FiniteSpace>, delta: Option<f64>, seeds: &[u64]) -> Result<Self> {
        let mut family = RegularFamily::new(space.a0());
        for &seed in seeds {
            let options = BuildOptions {
                delta,
                mode: GridMode::Desk,
                order_seed: Some(seed),
            };
            family.register(Arc::new(DyadicSystem::build(space.clone(), options)?))?;
        }
        Ok(family)
    }
}
