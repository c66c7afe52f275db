//! Finite metric measure spaces.
//!
//! A space is a finite list of points with a distance oracle and positive
//! weights. The weights stand in for the `s`-dimensional Hausdorff measure
//! restricted to the set, so every integral `∫_S g dμ` becomes the ordered sum
//! `Σ_{i∈S} w_i g(i)`.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heisenberg;

/// Spaces up to this size keep a dense distance matrix.
pub const MATRIX_CACHE_MAX: usize = 2048;
/// Triangle inequality is checked on every triple up to this size.
pub const EXHAUSTIVE_METRIC_CHECK_MAX: usize = 300;
const SAMPLED_METRIC_CHECKS: usize = 100_000;
const METRIC_TOL: f64 = 1e-9;

/// The ambient a space lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Ambient {
    /// Only a distance matrix is known.
    Abstract,
    /// `ℝ^dim` with the Euclidean distance.
    Euclidean { dim: usize },
    /// The Heisenberg group `H^n` (coordinates `x ∈ ℝ^{2n}`, `t ∈ ℝ`) with the
    /// Korányi distance.
    Heisenberg { n: usize },
}

impl Ambient {
    /// Number of coordinates per point, `None` for abstract spaces.
    pub fn coord_len(&self) -> Option<usize> {
        match *self {
            Ambient::Abstract => None,
            Ambient::Euclidean { dim } => Some(dim),
            Ambient::Heisenberg { n } => Some(2 * n + 1),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "abstract" {
            return Ok(Ambient::Abstract);
        }
        let (kind, arg) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("ambient `{s}`: expected abstract|euclidean:d|heisenberg:n")))?;
        let v: usize = arg.parse().map_err(|_| Error::Parse(format!("ambient `{s}`: bad dimension")))?;
        if v == 0 {
            return Err(Error::Parse(format!("ambient `{s}`: dimension must be positive")));
        }
        match kind {
            "euclidean" => Ok(Ambient::Euclidean { dim: v }),
            "heisenberg" => Ok(Ambient::Heisenberg { n: v }),
            _ => Err(Error::Parse(format!("ambient `{s}`: unknown kind `{kind}`"))),
        }
    }
}

impl fmt::Display for Ambient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ambient::Abstract => write!(f, "abstract"),
            Ambient::Euclidean { dim } => write!(f, "euclidean:{dim}"),
            Ambient::Heisenberg { n } => write!(f, "heisenberg:{n}"),
        }
    }
}

/// An ordered sequence of distinct point ids of a parent space.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PointSet(Vec<usize>);

impl PointSet {
    pub fn new(ids: Vec<usize>, n: usize) -> Result<Self> {
        let mut seen = vec![false; n];
        for &i in &ids {
            if i >= n {
                return Err(Error::Domain(format!("point id {i} out of range (n = {n})")));
            }
            if seen[i] {
                return Err(Error::Domain(format!("duplicate point id {i}")));
            }
            seen[i] = true;
        }
        Ok(PointSet(ids))
    }

    /// Ascending ids `0..n`.
    pub fn range(n: usize) -> Self {
        PointSet((0..n).collect())
    }

    pub(crate) fn from_sorted_unchecked(ids: Vec<usize>) -> Self {
        PointSet(ids)
    }

    pub fn ids(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, id: usize) -> bool {
        self.0.contains(&id)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }
}

impl AsRef<[usize]> for PointSet {
    fn as_ref(&self) -> &[usize] {
        &self.0
    }
}

/// A finite metric space with positive weights and a regularity exponent.
#[derive(Clone, Debug)]
pub struct MetricSpace {
    n: usize,
    ambient: Ambient,
    /// Row-major coordinates, `n * stride` values; empty for abstract spaces.
    coords: Vec<f64>,
    stride: usize,
    matrix: Option<Vec<f64>>,
    weights: Vec<f64>,
    default_weights: bool,
    s: f64,
    label: String,
}

impl MetricSpace {
    /// Builds an abstract space from a symmetric distance matrix with zero
    /// diagonal.
    pub fn from_matrix(rows: &[Vec<f64>], weights: Option<Vec<f64>>, s: f64) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Domain("empty space".into()));
        }
        let mut matrix = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Metric(format!("row {i} has {} entries, expected {n}", row.len())));
            }
            matrix.extend_from_slice(row);
        }
        for i in 0..n {
            if matrix[i * n + i] != 0.0 {
                return Err(Error::Metric(format!("nonzero diagonal at {i}")));
            }
            for j in 0..n {
                let d = matrix[i * n + j];
                if !d.is_finite() || d < 0.0 {
                    return Err(Error::Metric(format!("invalid distance d({i},{j}) = {d}")));
                }
                let e = matrix[j * n + i];
                if (d - e).abs() > 1e-12 * (1.0 + d.abs()) {
                    return Err(Error::Metric(format!("asymmetric: d({i},{j}) = {d}, d({j},{i}) = {e}")));
                }
                if i != j && d == 0.0 {
                    return Err(Error::Metric(format!("points {i} and {j} coincide")));
                }
            }
        }
        // Symmetrize exactly so that every later computation sees d(i,j) = d(j,i).
        for i in 0..n {
            for j in (i + 1)..n {
                matrix[j * n + i] = matrix[i * n + j];
            }
        }
        let mut space = MetricSpace {
            n,
            ambient: Ambient::Abstract,
            coords: Vec::new(),
            stride: 0,
            matrix: Some(matrix),
            weights: Vec::new(),
            default_weights: false,
            s: 1.0,
            label: String::new(),
        };
        space.finish(weights, s)?;
        Ok(space)
    }

    /// Builds a Euclidean or Heisenberg space from point coordinates.
    pub fn from_coords(points: &[Vec<f64>], ambient: Ambient, weights: Option<Vec<f64>>, s: f64) -> Result<Self> {
        let stride =
            ambient.coord_len().ok_or_else(|| Error::Ambient("abstract spaces need a distance matrix".into()))?;
        let n = points.len();
        if n == 0 {
            return Err(Error::Domain("empty space".into()));
        }
        let mut coords = Vec::with_capacity(n * stride);
        for (i, p) in points.iter().enumerate() {
            if p.len() != stride {
                return Err(Error::Domain(format!(
                    "point {i} has {} coordinates, ambient {ambient} needs {stride}",
                    p.len()
                )));
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::Domain(format!("point {i} has a non-finite coordinate")));
            }
            coords.extend_from_slice(p);
        }
        let mut space = MetricSpace {
            n,
            ambient,
            coords,
            stride,
            matrix: None,
            weights: Vec::new(),
            default_weights: false,
            s: 1.0,
            label: String::new(),
        };
        space.reject_coincident()?;
        if n <= MATRIX_CACHE_MAX {
            let mut m = vec![0.0; n * n];
            for i in 0..n {
                for j in (i + 1)..n {
                    let d = space.coord_dist(i, j);
                    m[i * n + j] = d;
                    m[j * n + i] = d;
                }
            }
            space.matrix = Some(m);
        }
        space.finish(weights, s)?;
        Ok(space)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    fn finish(&mut self, weights: Option<Vec<f64>>, s: f64) -> Result<()> {
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::Domain(format!("regularity exponent must be positive, got {s}")));
        }
        self.s = s;
        self.check_metric()?;
        match weights {
            Some(w) => {
                if w.len() != self.n {
                    return Err(Error::Weight(format!("{} weights for {} points", w.len(), self.n)));
                }
                if let Some((i, v)) = w.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
                    return Err(Error::Weight(format!("weight {i} is not positive: {v}")));
                }
                self.weights = w;
                self.default_weights = false;
            }
            None => {
                let diam = self.diam_of(&(0..self.n).collect::<Vec<_>>());
                let w = if diam > 0.0 { diam.powf(s) / self.n as f64 } else { 1.0 };
                self.weights = vec![w; self.n];
                self.default_weights = true;
            }
        }
        Ok(())
    }

    fn reject_coincident(&self) -> Result<()> {
        let mut order: Vec<usize> = (0..self.n).collect();
        order.sort_by(|&a, &b| {
            self.point(a)
                .iter()
                .zip(self.point(b))
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        for w in order.windows(2) {
            if self.point(w[0]) == self.point(w[1]) {
                return Err(Error::Metric(format!("points {} and {} coincide", w[0].min(w[1]), w[0].max(w[1]))));
            }
        }
        Ok(())
    }

    /// Checks the triangle inequality: on every triple when `n` is small, on a
    /// fixed-seed sample of triples otherwise.
    pub fn check_metric(&self) -> Result<()> {
        let n = self.n;
        let check = |i: usize, j: usize, k: usize| -> Result<()> {
            let (dij, djk, dik) = (self.dist(i, j), self.dist(j, k), self.dist(i, k));
            for (a, b, c, name) in [(dik, dij, djk, (i, k, j)), (dij, dik, djk, (i, j, k)), (djk, dij, dik, (j, k, i))]
            {
                if a > b + c + METRIC_TOL * (1.0 + a) {
                    return Err(Error::Metric(format!(
                        "triangle inequality fails: d({},{}) = {a} > {b} + {c} via {}",
                        name.0, name.1, name.2
                    )));
                }
            }
            Ok(())
        };
        if n <= EXHAUSTIVE_METRIC_CHECK_MAX {
            for i in 0..n {
                for j in (i + 1)..n {
                    for k in (j + 1)..n {
                        check(i, j, k)?;
                    }
                }
            }
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(0x6d65_7472_6963);
            for _ in 0..SAMPLED_METRIC_CHECKS {
                let (i, j, k) = (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n));
                check(i, j, k)?;
            }
        }
        Ok(())
    }

    fn coord_dist(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.point(i), self.point(j));
        match self.ambient {
            Ambient::Euclidean { .. } => euclid_dist(a, b),
            Ambient::Heisenberg { .. } => heisenberg::koranyi_dist_slices(a, b),
            Ambient::Abstract => unreachable!("abstract spaces always carry a matrix"),
        }
    }

    /// Distance recomputed from coordinates, bypassing the cache.
    pub fn dist_uncached(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        match self.ambient {
            Ambient::Abstract => self.dist(i, j),
            _ => self.coord_dist(i, j),
        }
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        match &self.matrix {
            Some(m) => m[i * self.n + j],
            None if i == j => 0.0,
            None => self.coord_dist(i, j),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn ambient(&self) -> Ambient {
        self.ambient
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn has_coords(&self) -> bool {
        self.stride > 0
    }

    /// Coordinates of point `i`. Panics for abstract spaces.
    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        assert!(self.stride > 0, "abstract spaces have no coordinates");
        &self.coords[i * self.stride..(i + 1) * self.stride]
    }

    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Whether the weights were filled in with the uniform default.
    pub fn uses_default_weights(&self) -> bool {
        self.default_weights
    }

    pub fn all(&self) -> PointSet {
        PointSet::range(self.n)
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn mass(&self, ids: &[usize]) -> f64 {
        ids.iter().map(|&i| self.weights[i]).sum()
    }

    /// Exact maximum pairwise distance; 0 for singletons.
    pub fn diam(&self, subset: &PointSet) -> Result<f64> {
        if subset.is_empty() {
            return Err(Error::Domain("diameter of an empty set".into()));
        }
        Ok(self.diam_of(subset.ids()))
    }

    pub(crate) fn diam_of(&self, ids: &[usize]) -> f64 {
        let mut best = 0.0f64;
        for (a, &i) in ids.iter().enumerate() {
            for &j in &ids[a + 1..] {
                best = best.max(self.dist(i, j));
            }
        }
        best
    }

    /// Smallest positive pairwise distance (infinity for a single point).
    pub fn min_separation(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                best = best.min(self.dist(i, j));
            }
        }
        best
    }

    /// The same space with every distance multiplied by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::Domain(format!("scale factor must be positive, got {lambda}")));
        }
        let w = Some(self.weights.clone());
        let out = match self.ambient {
            Ambient::Abstract => {
                let rows: Vec<Vec<f64>> =
                    (0..self.n).map(|i| (0..self.n).map(|j| lambda * self.dist(i, j)).collect()).collect();
                MetricSpace::from_matrix(&rows, w, self.s)?
            }
            Ambient::Euclidean { .. } => {
                let pts: Vec<Vec<f64>> =
                    (0..self.n).map(|i| self.point(i).iter().map(|v| v * lambda).collect()).collect();
                MetricSpace::from_coords(&pts, self.ambient, w, self.s)?
            }
            Ambient::Heisenberg { .. } => {
                // Heisenberg dilation: x ↦ λx, t ↦ λ²t.
                let pts: Vec<Vec<f64>> = (0..self.n)
                    .map(|i| {
                        let p = self.point(i);
                        let last = p.len() - 1;
                        p.iter()
                            .enumerate()
                            .map(|(c, v)| if c == last { v * lambda * lambda } else { v * lambda })
                            .collect()
                    })
                    .collect();
                MetricSpace::from_coords(&pts, self.ambient, w, self.s)?
            }
        };
        Ok(out.with_label(self.label.clone()))
    }

    /// Sub-space induced by `subset`, re-indexed in subset order.
    pub fn restrict(&self, subset: &PointSet) -> Result<Self> {
        let w = Some(subset.iter().map(|i| self.weights[i]).collect());
        let out = match self.ambient {
            Ambient::Abstract => {
                let rows: Vec<Vec<f64>> =
                    subset.iter().map(|i| subset.iter().map(|j| self.dist(i, j)).collect()).collect();
                MetricSpace::from_matrix(&rows, w, self.s)?
            }
            _ => {
                let pts: Vec<Vec<f64>> = subset.iter().map(|i| self.point(i).to_vec()).collect();
                MetricSpace::from_coords(&pts, self.ambient, w, self.s)?
            }
        };
        Ok(out.with_label(self.label.clone()))
    }
}

#[inline]
pub(crate) fn euclid_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> MetricSpace {
        let pts: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        MetricSpace::from_coords(&pts, Ambient::Euclidean { dim: 1 }, None, 1.0).unwrap()
    }

    #[test]
    fn collinear_reals() {
        let sp = line(&[0.0, 1.0, 3.0]);
        assert_eq!(sp.dist(0, 2), 3.0);
        assert_eq!(sp.diam(&sp.all()).unwrap(), 3.0);
        // default weights: diam^s / n
        assert!((sp.weight(0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_point_matrix() {
        let sp = MetricSpace::from_matrix(&[vec![0.0, 1.0], vec![1.0, 0.0]], None, 1.0).unwrap();
        assert_eq!(sp.len(), 2);
        assert_eq!(sp.dist(1, 0), 1.0);
    }

    #[test]
    fn triangle_violation_is_metric_error() {
        let m = vec![vec![0.0, 1.0, 5.0], vec![1.0, 0.0, 1.0], vec![5.0, 1.0, 0.0]];
        assert!(matches!(MetricSpace::from_matrix(&m, None, 1.0), Err(Error::Metric(_))));
    }

    #[test]
    fn bad_weights() {
        let m = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        assert!(matches!(MetricSpace::from_matrix(&m, Some(vec![1.0, 0.0]), 1.0), Err(Error::Weight(_))));
        assert!(matches!(MetricSpace::from_matrix(&m, Some(vec![1.0]), 1.0), Err(Error::Weight(_))));
    }

    #[test]
    fn singleton_and_empty_diam() {
        let sp = line(&[0.0, 1.0, 3.0]);
        assert_eq!(sp.diam(&PointSet::new(vec![1], 3).unwrap()).unwrap(), 0.0);
        assert!(matches!(sp.diam(&PointSet::new(vec![], 3).unwrap()), Err(Error::Domain(_))));
    }

    #[test]
    fn point_set_validation() {
        assert!(PointSet::new(vec![0, 3], 3).is_err());
        assert!(PointSet::new(vec![1, 1], 3).is_err());
        assert_eq!(PointSet::new(vec![2, 0], 3).unwrap().ids(), &[2, 0]);
    }

    #[test]
    fn coincident_points_rejected() {
        let pts = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 0.0]];
        assert!(matches!(
            MetricSpace::from_coords(&pts, Ambient::Euclidean { dim: 2 }, None, 1.0),
            Err(Error::Metric(_))
        ));
    }

    #[test]
    fn ambient_round_trip() {
        for a in ["abstract", "euclidean:3", "heisenberg:2"] {
            assert_eq!(Ambient::parse(a).unwrap().to_string(), a);
        }
        assert!(Ambient::parse("euclidean:0").is_err());
        assert!(Ambient::parse("sphere:2").is_err());
    }

    #[test]
    fn cached_matrix_agrees_with_coordinates() {
        let pts: Vec<Vec<f64>> =
            (0..40).map(|i| vec![(i as f64 * 0.37).sin(), (i as f64).sqrt(), 0.1 * i as f64]).collect();
        let sp = MetricSpace::from_coords(&pts, Ambient::Heisenberg { n: 1 }, None, 1.0).unwrap();
        for i in 0..40 {
            for j in 0..40 {
                let (a, b) = (sp.dist(i, j), sp.dist_uncached(i, j));
                assert!((a - b).abs() <= 1e-12 * (1.0 + a));
                assert_eq!(sp.dist(i, j), sp.dist(j, i));
            }
        }
    }
}
