//! Finite weighted quasi-metric spaces and their geometric constants.
//!
//! Every constant is computed by exhaustive enumeration: the quasi-triangle
//! constant over all triples, the doubling constant over all realized
//! (center, radius) pairs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite set of points with a quasi-metric and a positive point measure.
#[derive(Debug, Clone)]
pub struct FiniteSpace {
    n: usize,
    dist: Vec<f64>,
    weights: Vec<f64>,
    a0: f64,
    cmu: f64,
    omega: f64,
    diameter: f64,
    min_distance: f64,
}

/// A ball `{y : d(center, y) < radius}` together with its members.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ball {
    pub center: usize,
    pub radius: f64,
    pub members: Vec<usize>,
    pub measure: f64,
}

impl Ball {
    pub fn contains(&self, x: usize) -> bool {
        self.members.binary_search(&x).is_ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Euclidean,
    Manhattan,
    Chebyshev,
    SquaredEuclidean,
}

impl Metric {
    fn eval(self, a: &[f64], b: &[f64]) -> f64 {
        let diffs = a.iter().zip(b).map(|(x, y)| (x - y).abs());
        match self {
            Metric::Euclidean => diffs.map(|d| d * d).sum::<f64>().sqrt(),
            Metric::SquaredEuclidean => diffs.map(|d| d * d).sum::<f64>(),
            Metric::Manhattan => diffs.sum(),
            Metric::Chebyshev => diffs.fold(0.0, f64::max),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointRecord {
    #[serde(default)]
    pub id: Option<usize>,
    #[serde(default)]
    pub weight: Option<f64>,
    pub coords: Vec<f64>,
}

/// On-disk description of a space: coordinates with a metric name, or an
/// explicit distance matrix. Weights default to 1.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<PointRecord>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<Metric>,
    /// Raise every distance to this power (power < 1 snowflakes a metric,
    /// power > 1 produces a genuine quasi-metric).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

/// Parse and validate a space document.
pub fn load_space(source: &str) -> Result<FiniteSpace> {
    let doc: SpaceDocument = serde_json::from_str(source).map_err(|e| {
        Error::Schema(format!("line {} column {}: {}", e.line(), e.column(), e))
    })?;
    FiniteSpace::from_document(&doc)
}

impl FiniteSpace {
    pub fn from_document(doc: &SpaceDocument) -> Result<Self> {
        let power = doc.power.unwrap_or(1.0);
        if !(power > 0.0 && power.is_finite()) {
            return Err(Error::Schema(format!("power must be positive, got {power}")));
        }
        match (&doc.points, &doc.matrix) {
            (Some(_), Some(_)) => Err(Error::Schema(
                "supply either \"points\" or \"matrix\", not both".into(),
            )),
            (None, None) => Err(Error::Schema(
                "missing \"points\" or \"matrix\"".into(),
            )),
            (Some(points), None) => {
                let metric = doc.metric.unwrap_or(Metric::Euclidean);
                if doc.weights.is_some() {
                    return Err(Error::Schema(
                        "\"weights\" goes with \"matrix\"; put per-point weights in \"points\"".into(),
                    ));
                }
                let n = points.len();
                let mut order: Vec<Option<usize>> = vec![None; n];
                for (pos, p) in points.iter().enumerate() {
                    let id = p.id.unwrap_or(pos);
                    if id >= n {
                        return Err(Error::Schema(format!(
                            "point id {id} out of range 0..{n}"
                        )));
                    }
                    if order[id].is_some() {
                        return Err(Error::Schema(format!("duplicate point id {id}")));
                    }
                    order[id] = Some(pos);
                }
                let dim = points.first().map_or(0, |p| p.coords.len());
                if let Some(bad) = points.iter().position(|p| p.coords.len() != dim) {
                    return Err(Error::Schema(format!(
                        "point at position {bad} has {} coordinates, expected {dim}",
                        points[bad].coords.len()
                    )));
                }
                let ordered: Vec<&PointRecord> =
                    order.iter().map(|pos| &points[pos.unwrap()]).collect();
                let coords: Vec<Vec<f64>> = ordered.iter().map(|p| p.coords.clone()).collect();
                let weights: Vec<f64> = ordered.iter().map(|p| p.weight.unwrap_or(1.0)).collect();
                Self::from_coords(&coords, weights, metric, power)
            }
            (None, Some(matrix)) => {
                if doc.metric.is_some() {
                    return Err(Error::Schema(
                        "\"metric\" applies to \"points\" only".into(),
                    ));
                }
                let n = matrix.len();
                let weights = doc.weights.clone().unwrap_or_else(|| vec![1.0; n]);
                if weights.len() != n {
                    return Err(Error::Schema(format!(
                        "{} weights for a {n}x{n} matrix",
                        weights.len()
                    )));
                }
                if let Some(r) = matrix.iter().position(|row| row.len() != n) {
                    return Err(Error::Schema(format!(
                        "matrix row {r} has {} entries, expected {n}",
                        matrix[r].len()
                    )));
                }
                let dist = matrix
                    .iter()
                    .flatten()
                    .map(|&d| if power == 1.0 { d } else { d.powf(power) })
                    .collect();
                Self::from_flat(n, dist, weights)
            }
        }
    }

    pub fn from_coords(
        coords: &[Vec<f64>],
        weights: Vec<f64>,
        metric: Metric,
        power: f64,
    ) -> Result<Self> {
        let n = coords.len();
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let mut d = metric.eval(&coords[i], &coords[j]);
                if power != 1.0 {
                    d = d.powf(power);
                }
                dist[i * n + j] = d;
                dist[j * n + i] = d;
            }
        }
        Self::from_flat(n, dist, weights)
    }

    pub fn from_matrix(matrix: &[Vec<f64>], weights: Vec<f64>) -> Result<Self> {
        let n = matrix.len();
        if let Some(r) = matrix.iter().position(|row| row.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: matrix[r].len(),
            });
        }
        Self::from_flat(n, matrix.iter().flatten().copied().collect(), weights)
    }

    /// Build from a row-major distance matrix.
    pub fn from_flat(n: usize, dist: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Schema("space has no points".into()));
        }
        if dist.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: dist.len(),
            });
        }
        if weights.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: weights.len(),
            });
        }
        for (point, &weight) in weights.iter().enumerate() {
            if !(weight > 0.0 && weight.is_finite()) {
                return Err(Error::NonpositiveWeight { point, weight });
            }
        }
        for row in 0..n {
            for col in 0..n {
                let value = dist[row * n + col];
                if !value.is_finite() || value < 0.0 {
                    return Err(Error::InvalidDistance { row, col, value });
                }
                if row == col && value != 0.0 {
                    return Err(Error::InvalidDistance { row, col, value });
                }
                if col > row {
                    let backward = dist[col * n + row];
                    if value != backward {
                        return Err(Error::Asymmetric {
                            row,
                            col,
                            forward: value,
                            backward,
                        });
                    }
                    if value == 0.0 {
                        return Err(Error::ZeroDistance {
                            a: row,
                            b: col,
                            dist: value,
                        });
                    }
                }
            }
        }

        let mut space = FiniteSpace {
            n,
            dist,
            weights,
            a0: 1.0,
            cmu: 1.0,
            omega: 0.0,
            diameter: 0.0,
            min_distance: f64::INFINITY,
        };
        for i in 0..n {
            for j in (i + 1)..n {
                let d = space.d(i, j);
                space.diameter = space.diameter.max(d);
                space.min_distance = space.min_distance.min(d);
            }
        }
        space.a0 = quasi_triangle_constant(&space);
        space.cmu = doubling_constant(&space);
        space.omega = space.cmu.log2();
        Ok(space)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn d(&self, x: usize, y: usize) -> f64 {
        self.dist[x * self.n + y]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.dist[x * self.n..(x + 1) * self.n]
    }

    #[inline]
    pub fn weight(&self, x: usize) -> f64 {
        self.weights[x]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn a0(&self) -> f64 {
        self.a0
    }

    pub fn cmu(&self) -> f64 {
        self.cmu
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// Smallest distance between distinct points; infinite for one point.
    pub fn min_distance(&self) -> f64 {
        self.min_distance
    }

    pub fn total_measure(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn measure_of(&self, members: &[usize]) -> f64 {
        members.iter().map(|&x| self.weights[x]).sum()
    }

    /// Measure of `B(center, radius)` without materializing its members.
    pub fn ball_measure(&self, center: usize, radius: f64) -> f64 {
        self.row(center)
            .iter()
            .zip(&self.weights)
            .filter(|(d, _)| **d < radius)
            .map(|(_, w)| w)
            .sum()
    }

    pub fn ball(&self, center: usize, radius: f64) -> Ball {
        let members: Vec<usize> = (0..self.n)
            .filter(|&y| self.d(center, y) < radius)
            .collect();
        let measure = self.measure_of(&members);
        Ball {
            center,
            radius,
            members,
            measure,
        }
    }

    /// Positive distances from `x`, ascending and deduplicated.
    pub fn radii_from(&self, x: usize) -> Vec<f64> {
        let mut r: Vec<f64> = self.row(x).iter().copied().filter(|&d| d > 0.0).collect();
        r.sort_by(f64::total_cmp);
        r.dedup();
        r
    }
}

fn quasi_triangle_constant(space: &FiniteSpace) -> f64 {
    let n = space.n;
    let mut a0: f64 = 1.0;
    for x in 0..n {
        let rx = space.row(x);
        for y in (x + 1)..n {
            let ry = space.row(y);
            let detour = rx
                .iter()
                .zip(ry)
                .map(|(a, b)| a + b)
                .fold(f64::INFINITY, f64::min);
            a0 = a0.max(rx[y] / detour);
        }
    }
    a0
}

/// Ball measures around `x` as a step function of the radius: sorted
/// distances from `x` with cumulative weights.
struct RadialProfile {
    dists: Vec<f64>,
    cumulative: Vec<f64>,
}

impl RadialProfile {
    fn new(space: &FiniteSpace, x: usize) -> Self {
        let mut pairs: Vec<(f64, f64)> = space
            .row(x)
            .iter()
            .copied()
            .zip(space.weights.iter().copied())
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut cumulative = Vec::with_capacity(pairs.len());
        let mut acc = 0.0;
        for &(_, w) in &pairs {
            acc += w;
            cumulative.push(acc);
        }
        RadialProfile {
            dists: pairs.into_iter().map(|p| p.0).collect(),
            cumulative,
        }
    }

    /// `μ(B(x, r))` with strict inequality.
    fn measure(&self, r: f64) -> f64 {
        let k = self.dists.partition_point(|&d| d < r);
        if k == 0 {
            0.0
        } else {
            self.cumulative[k - 1]
        }
    }
}

fn doubling_constant(space: &FiniteSpace) -> f64 {
    let mut cmu: f64 = 1.0;
    for x in 0..space.n {
        let profile = RadialProfile::new(space, x);
        for r in space.radii_from(x) {
            cmu = cmu.max(profile.measure(2.0 * r) / profile.measure(r));
        }
    }
    cmu
}

/// Worst-case growth of ball measures under dilation by `lambda`.
#[derive(Debug, Clone, Serialize)]
pub struct DoublingRow {
    pub lambda: f64,
    /// Largest `μ(B(x, λr)) / μ(B(x, r))` over all centers and radii.
    pub max_ratio: f64,
    /// `cmu · λ^ω`.
    pub bound: f64,
    /// `ln(max_ratio) / ln(λ)`; zero for `λ = 1`.
    pub growth_exponent: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct DoublingProfile {
    pub cmu: f64,
    pub omega: f64,
    pub rows: Vec<DoublingRow>,
}

impl DoublingProfile {
    pub fn holds(&self) -> bool {
        self.rows.iter().all(|r| r.holds)
    }
}

pub const DEFAULT_DILATIONS: [f64; 7] = [1.0, 1.5, 2.0, 3.0, 4.0, 8.0, 16.0];

/// For each `λ ≥ 1`, the supremum over all `x` and `r > 0` of
/// `μ(B(x,λr))/μ(B(x,r))`. The ratio is piecewise monotone in `r` with
/// breakpoints at the distances from `x`, so scanning those is exact.
pub fn doubling_profile(space: &FiniteSpace, lambdas: &[f64]) -> Result<DoublingProfile> {
    if let Some(&bad) = lambdas.iter().find(|&&l| !(l >= 1.0 && l.is_finite())) {
        return Err(Error::InvalidParameter(format!(
            "dilation {bad} must be a finite real >= 1"
        )));
    }
    let profiles: Vec<RadialProfile> = (0..space.n).map(|x| RadialProfile::new(space, x)).collect();
    let rows = lambdas
        .iter()
        .map(|&lambda| {
            let mut max_ratio: f64 = 1.0;
            for (x, profile) in profiles.iter().enumerate() {
                for r in space.radii_from(x) {
                    max_ratio = max_ratio.max(profile.measure(lambda * r) / profile.measure(r));
                }
            }
            let bound = space.cmu * lambda.powf(space.omega);
            let growth_exponent = if lambda > 1.0 {
                max_ratio.ln() / lambda.ln()
            } else {
                0.0
            };
            DoublingRow {
                lambda,
                max_ratio,
                bound,
                growth_exponent,
                holds: max_ratio <= bound * (1.0 + 1e-12),
            }
        })
        .collect();
    Ok(DoublingProfile {
        cmu: space.cmu,
        omega: space.omega,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> FiniteSpace {
        let coords: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        FiniteSpace::from_coords(&coords, vec![1.0; xs.len()], Metric::Euclidean, 1.0).unwrap()
    }

    #[test]
    fn single_point() {
        let s = line(&[0.0]);
        assert_eq!(s.a0(), 1.0);
        assert_eq!(s.cmu(), 1.0);
        assert_eq!(s.omega(), 0.0);
    }

    #[test]
    fn line_balls() {
        let s = line(&[0.0, 1.0, 2.0, 10.0]);
        assert_eq!(s.a0(), 1.0);
        let b = s.ball(0, 1.5);
        assert_eq!(b.members, vec![0, 1]);
        assert_eq!(b.measure, 2.0);
        assert_eq!(s.ball(0, 0.5).members, vec![0]);
        assert_eq!(s.ball(2, 9.0).measure, 4.0);
    }

    #[test]
    fn squared_distance_is_quasi_metric() {
        let coords = vec![vec![0.0], vec![1.0], vec![2.0]];
        let s = FiniteSpace::from_coords(&coords, vec![1.0; 3], Metric::Euclidean, 2.0).unwrap();
        assert_eq!(s.a0(), 2.0);
    }

    #[test]
    fn rejects_bad_documents() {
        let asym = r#"{"matrix": [[0, 1], [2, 0]]}"#;
        assert!(matches!(load_space(asym), Err(Error::Asymmetric { .. })));
        let weight = r#"{"matrix": [[0, 1], [1, 0]], "weights": [1, 0]}"#;
        assert!(matches!(load_space(weight), Err(Error::NonpositiveWeight { point: 1, .. })));
        let zero = r#"{"matrix": [[0, 0], [0, 0]]}"#;
        assert!(matches!(load_space(zero), Err(Error::ZeroDistance { .. })));
        let typo = "{\n  \"points\": [],\n  \"metrc\": \"euclidean\"\n}";
        match load_space(typo) {
            Err(Error::Schema(msg)) => assert!(msg.contains("line 3"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn point_ids_reorder() {
        let doc = r#"{"points": [{"id": 1, "coords": [5]}, {"id": 0, "weight": 2, "coords": [0]}],
                      "metric": "euclidean"}"#;
        let s = load_space(doc).unwrap();
        assert_eq!(s.weight(0), 2.0);
        assert_eq!(s.d(0, 1), 5.0);
    }
}
