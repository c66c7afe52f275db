//! Pointwise flatness coefficients: triangular excess, Menger curvature, β, κ
//! and ι numbers.
//!
//! Every μ-integral is the weighted sum over ids in subset order; normalized
//! averages divide by `μ(S)`. Double and triple sums run over fixed row chunks
//! and are reduced in row order, so values do not depend on the thread count.

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heisenberg::{self, HorizontalPlane};
use crate::menger::{self, EmbeddingWitness};
use crate::planes::{self, AffinePlane};
use crate::space::{Ambient, MetricSpace, PointSet};

/// Relative floor below which an excess or a point-to-plane distance is
/// treated as rounding noise and set to 0.
pub const ROUNDING_FLOOR: f64 = 1e-12;
pub const DEFAULT_EXACT_CAP: usize = 256;
pub const DEFAULT_MC_SAMPLES: usize = 100_000;
const MC_CHUNK: usize = 4096;
const REFINE_ITERS: usize = 200;
pub const DEFAULT_ANCHOR_CANDIDATES: usize = 8;

/// Excess of a triangle with side lengths `a, b, c`:
/// `min` over middle vertices of the additivity defect, i.e. `a + b + c − 2 max`.
#[inline]
pub fn excess_from_sides(a: f64, b: f64, c: f64) -> f64 {
    // sorted so the rounding does not depend on the labeling
    let mut s = [a, b, c];
    s.sort_by(f64::total_cmp);
    let [lo, mid, hi] = s;
    let sum = lo + mid + hi;
    let e = (lo + mid) - hi;
    if e <= ROUNDING_FLOOR * sum {
        0.0
    } else {
        e
    }
}

pub fn triangular_excess(space: &MetricSpace, i: usize, j: usize, k: usize) -> f64 {
    excess_from_sides(space.dist(i, j), space.dist(j, k), space.dist(i, k))
}

/// `∂S`: the largest excess over the triples of `ids`.
pub fn set_excess(space: &MetricSpace, ids: &[usize]) -> f64 {
    let mut best: f64 = 0.0;
    for a in 0..ids.len() {
        for b in a + 1..ids.len() {
            for c in b + 1..ids.len() {
                best = best.max(triangular_excess(space, ids[a], ids[b], ids[c]));
            }
        }
    }
    best
}

/// Curvature `1/R` of the planar triangle with sides `a, b, c`.
pub fn menger_from_sides(a: f64, b: f64, c: f64) -> f64 {
    if a == 0.0 || b == 0.0 || c == 0.0 {
        return 0.0;
    }
    let mut s = [a, b, c];
    s.sort_by(|x, y| y.total_cmp(x));
    let [a, b, c] = s;
    // Kahan's rearrangement of Heron's formula
    let p = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c));
    if p <= 0.0 {
        return 0.0;
    }
    let area = 0.25 * p.sqrt();
    4.0 * area / (a * b * c)
}

pub fn menger_curvature(space: &MetricSpace, i: usize, j: usize, k: usize) -> f64 {
    menger_from_sides(space.dist(i, j), space.dist(j, k), space.dist(i, k))
}

/// `(Σ w v^q / Σ w)^{1/q}`, or `max v` for `q = ∞`.
pub fn weighted_power_mean(pairs: impl Iterator<Item = (f64, f64)>, q: f64) -> f64 {
    if q.is_infinite() {
        return pairs.map(|(_, v)| v).fold(0.0, f64::max);
    }
    let (mut num, mut den) = (0.0, 0.0);
    for (w, v) in pairs {
        num += w * v.powf(q);
        den += w;
    }
    if den == 0.0 {
        0.0
    } else {
        (num / den).powf(1.0 / q)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Mode {
    Exact,
    MonteCarlo { samples: usize, seed: u64, std_error: f64 },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Witness {
    Plane { plane: AffinePlane, baseline: Option<f64> },
    Horizontal { plane: HorizontalPlane, baseline: Option<f64> },
    Embedding(EmbeddingWitness),
    Map { source: String, values: Vec<Vec<f64>> },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoefficientValue {
    pub raw: f64,
    pub clamped: f64,
    pub mode: Mode,
    pub witness: Option<Witness>,
}

impl CoefficientValue {
    pub fn exact(raw: f64, witness: Option<Witness>) -> Self {
        CoefficientValue { raw, clamped: raw.min(1.0), mode: Mode::Exact, witness }
    }
}

/// Where β takes its plane from.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PlaneSource {
    Affine(AffinePlane),
    Horizontal(HorizontalPlane),
    /// Fit a Euclidean `k`-plane.
    EuclideanFamily {
        k: usize,
    },
    /// Fit a horizontal `k`-plane.
    HeisHorizontalFamily {
        k: usize,
    },
}

fn positive_diam(space: &MetricSpace, subset: &PointSet) -> Result<f64> {
    let d = space.diam(subset)?;
    if d == 0.0 {
        return Err(Error::Domain("coefficient of a zero-diameter set".into()));
    }
    Ok(d)
}

fn check_q(q: f64) -> Result<()> {
    if !(q > 0.0) {
        return Err(Error::Domain(format!("exponent q must be positive, got {q}")));
    }
    Ok(())
}

/// `β_{q,V}(S)`: weighted `L^q` average of `d(y, V)/diam(S)`.
pub fn beta(space: &MetricSpace, subset: &PointSet, q: f64, source: &PlaneSource) -> Result<CoefficientValue> {
    check_q(q)?;
    let diam = positive_diam(space, subset)?;
    let ids = subset.ids();
    match source {
        PlaneSource::Affine(plane) => {
            let dim = match space.ambient() {
                Ambient::Euclidean { dim } => dim,
                a => return Err(Error::Ambient(format!("Euclidean plane on a {a} space"))),
            };
            if plane.dim() != dim {
                return Err(Error::Domain(format!("plane in ℝ^{} vs space in ℝ^{dim}", plane.dim())));
            }
            let v = planes::beta_plane(space, ids, q, plane, diam);
            Ok(CoefficientValue::exact(v, Some(Witness::Plane { plane: plane.clone(), baseline: None })))
        }
        PlaneSource::Horizontal(plane) => {
            match space.ambient() {
                Ambient::Heisenberg { n } if n == plane.n() => {}
                a => return Err(Error::Ambient(format!("horizontal plane in H^{} on a {a} space", plane.n()))),
            }
            let v = heisenberg::beta_hplane(space, ids, q, plane, diam);
            Ok(CoefficientValue::exact(v, Some(Witness::Horizontal { plane: plane.clone(), baseline: None })))
        }
        PlaneSource::EuclideanFamily { k } => {
            let fit = planes::fit_plane(space, subset, *k, q)?;
            Ok(CoefficientValue::exact(fit.value, Some(Witness::Plane { plane: fit.plane, baseline: fit.baseline })))
        }
        PlaneSource::HeisHorizontalFamily { k } => {
            let fit = heisenberg::fit_hplane(space, subset, q, *k)?;
            Ok(CoefficientValue::exact(
                fit.value,
                Some(Witness::Horizontal { plane: fit.plane, baseline: Some(fit.baseline) }),
            ))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KappaOptions {
    pub exact_cap: usize,
    pub samples: usize,
    pub seed: u64,
}

impl Default for KappaOptions {
    fn default() -> Self {
        KappaOptions { exact_cap: DEFAULT_EXACT_CAP, samples: DEFAULT_MC_SAMPLES, seed: 0 }
    }
}

/// Dense distance matrix of a subset, row-major in subset order.
pub(crate) fn local_matrix(space: &MetricSpace, ids: &[usize]) -> Vec<f64> {
    let m = ids.len();
    let mut out = vec![0.0; m * m];
    out.par_chunks_mut(m.max(1)).enumerate().for_each(|(a, row)| {
        for b in 0..m {
            row[b] = space.dist(ids[a], ids[b]);
        }
    });
    out
}

/// `κ(S) = μ(S)^{-3} ΣΣΣ w w w ∂/diam(S)`.
pub fn kappa(space: &MetricSpace, subset: &PointSet, opts: &KappaOptions) -> Result<CoefficientValue> {
    let diam = positive_diam(space, subset)?;
    let ids = subset.ids();
    if ids.len() <= opts.exact_cap {
        Ok(CoefficientValue::exact(kappa_exact(space, ids, diam), None))
    } else {
        let (mean, se) = kappa_monte_carlo(space, ids, diam, opts.samples, opts.seed)?;
        Ok(CoefficientValue {
            raw: mean,
            clamped: mean.min(1.0),
            mode: Mode::MonteCarlo { samples: opts.samples, seed: opts.seed, std_error: se },
            witness: None,
        })
    }
}

/// Exact triple sum over `i < j < k` (repeated indices contribute 0), times 6.
pub(crate) fn kappa_exact(space: &MetricSpace, ids: &[usize], diam: f64) -> f64 {
    let m = ids.len();
    let d = local_matrix(space, ids);
    let w: Vec<f64> = ids.iter().map(|&i| space.weight(i)).collect();
    let mu: f64 = w.iter().sum();
    let partial: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|a| {
            let mut acc = 0.0;
            for b in a + 1..m {
                let dab = d[a * m + b];
                let mut inner = 0.0;
                for c in b + 1..m {
                    inner += w[c] * excess_from_sides(dab, d[b * m + c], d[a * m + c]);
                }
                acc += w[b] * inner;
            }
            w[a] * acc
        })
        .collect();
    let total: f64 = partial.iter().sum();
    6.0 * total / (mu * mu * mu * diam)
}

/// Weighted Monte Carlo estimate of κ with its standard error. Chunk `c`
/// draws from its own ChaCha stream, so the estimate is schedule-independent.
pub(crate) fn kappa_monte_carlo(
    space: &MetricSpace,
    ids: &[usize],
    diam: f64,
    samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if samples < 2 {
        return Err(Error::Domain("Monte Carlo κ needs at least 2 samples".into()));
    }
    let w: Vec<f64> = ids.iter().map(|&i| space.weight(i)).collect();
    let dist = WeightedIndex::new(&w).map_err(|e| Error::Weight(e.to_string()))?;
    let chunks = samples.div_ceil(MC_CHUNK);
    let sums: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let count = MC_CHUNK.min(samples - c * MC_CHUNK);
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..count {
                let (a, b, e) = (ids[dist.sample(&mut rng)], ids[dist.sample(&mut rng)], ids[dist.sample(&mut rng)]);
                let v = triangular_excess(space, a, b, e) / diam;
                s1 += v;
                s2 += v * v;
            }
            (s1, s2)
        })
        .collect();
    let (s1, s2) = sums.iter().fold((0.0, 0.0), |acc, x| (acc.0 + x.0, acc.1 + x.1));
    let n = samples as f64;
    let mean = s1 / n;
    let var = ((s2 - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok((mean, (var / n).sqrt()))
}

/// A map from the subset into `ℝ^k`, rows in subset order.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Chart {
    pub source: String,
    pub values: Vec<Vec<f64>>,
}

/// `(μ^{-2} ΣΣ w w |d(x,y) − |f(x) − f(y)||^q)^{1/q} / diam`, or the max for `q = ∞`.
pub fn distortion(space: &MetricSpace, ids: &[usize], values: &[Vec<f64>], q: f64, diam: f64) -> f64 {
    let d = local_matrix(space, ids);
    distortion_local(&d, &weights_of(space, ids), values, q, diam)
}

fn weights_of(space: &MetricSpace, ids: &[usize]) -> Vec<f64> {
    ids.iter().map(|&i| space.weight(i)).collect()
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// `|d − d'|/diam`, with rounding noise from two floored distances set to 0.
#[inline]
fn pair_error(d: f64, d2: f64, diam: f64) -> f64 {
    let e = (d - d2).abs() / diam;
    if e <= 2.0 * ROUNDING_FLOOR {
        0.0
    } else {
        e
    }
}

fn distortion_local(d: &[f64], w: &[f64], f: &[Vec<f64>], q: f64, diam: f64) -> f64 {
    let m = w.len();
    let rows: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|a| {
            let mut acc: f64 = 0.0;
            for b in 0..m {
                if a == b {
                    continue;
                }
                let e = pair_error(d[a * m + b], euclid(&f[a], &f[b]), diam);
                if q.is_infinite() {
                    acc = acc.max(e);
                } else {
                    acc += w[b] * e.powf(q);
                }
            }
            if q.is_infinite() {
                acc
            } else {
                w[a] * acc
            }
        })
        .collect();
    if q.is_infinite() {
        rows.iter().copied().fold(0.0, f64::max)
    } else {
        let mu: f64 = w.iter().sum();
        (rows.iter().sum::<f64>() / (mu * mu)).powf(1.0 / q)
    }
}

/// `ι_{q,V}(S)`: distortion of the projection onto `V`.
pub fn iota_plane(space: &MetricSpace, subset: &PointSet, q: f64, plane: &PlaneSource) -> Result<CoefficientValue> {
    check_q(q)?;
    let diam = positive_diam(space, subset)?;
    let ids = subset.ids();
    let m = ids.len();
    let proj_dist: Box<dyn Fn(usize, usize) -> f64 + Sync> = match (plane, space.ambient()) {
        (PlaneSource::Affine(p), Ambient::Euclidean { dim }) if p.dim() == dim => {
            let pr: Vec<Vec<f64>> = ids.iter().map(|&i| p.project(space.point(i))).collect();
            Box::new(move |a, b| euclid(&pr[a], &pr[b]))
        }
        (PlaneSource::Horizontal(p), Ambient::Heisenberg { n }) if n == p.n() => {
            // the projected points sit on the plane, where the distance is the chart distance
            let pr: Vec<Vec<f64>> = ids.iter().map(|&i| p.chart_coords(space.point(i))).collect();
            Box::new(move |a, b| euclid(&pr[a], &pr[b]))
        }
        (PlaneSource::Affine(_) | PlaneSource::Horizontal(_), a) => {
            return Err(Error::Ambient(format!("plane does not match the {a} ambient")))
        }
        _ => return Err(Error::Domain("ι_plane needs an explicit plane".into())),
    };
    let d = local_matrix(space, ids);
    let w = weights_of(space, ids);
    let rows: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|a| {
            let mut acc: f64 = 0.0;
            for b in 0..m {
                if a != b {
                    let e = pair_error(d[a * m + b], proj_dist(a, b), diam);
                    if q.is_infinite() {
                        acc = acc.max(e);
                    } else {
                        acc += w[b] * e.powf(q);
                    }
                }
            }
            if q.is_infinite() {
                acc
            } else {
                w[a] * acc
            }
        })
        .collect();
    let raw = if q.is_infinite() {
        rows.iter().copied().fold(0.0, f64::max)
    } else {
        let mu: f64 = w.iter().sum();
        (rows.iter().sum::<f64>() / (mu * mu)).powf(1.0 / q)
    };
    let witness = match plane {
        PlaneSource::Affine(p) => Witness::Plane { plane: p.clone(), baseline: None },
        PlaneSource::Horizontal(p) => Witness::Horizontal { plane: p.clone(), baseline: None },
        _ => unreachable!(),
    };
    Ok(CoefficientValue::exact(raw, Some(witness)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IotaOptions {
    pub kappa: KappaOptions,
    /// Number of Menger anchor pairs tried.
    pub anchors: usize,
    /// Anchor-selection constant.
    pub anchor_c: f64,
    pub refine: bool,
}

impl Default for IotaOptions {
    fn default() -> Self {
        IotaOptions {
            kappa: KappaOptions::default(),
            anchors: DEFAULT_ANCHOR_CANDIDATES,
            anchor_c: menger::DEFAULT_ANCHOR_C,
            refine: true,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IotaBracket {
    pub lower: f64,
    pub upper: f64,
    /// `κ` used for the lower bound (`q = 1`, `k = 1` only).
    pub kappa: Option<CoefficientValue>,
    pub upper_witness: Chart,
    /// Best Menger sign-map candidate, when `k = 1`.
    pub menger: Option<EmbeddingWitness>,
}

impl IotaBracket {
    pub fn gap_ratio(&self) -> Option<f64> {
        (self.lower > 0.0).then(|| self.upper / self.lower)
    }
}

/// Two-sided estimate of `ι_{q,k}(S)`.
///
/// The lower bound `κ/3` holds for every map into ℝ: order a triple by its
/// images and the excess is at most the sum of the three pair distortions.
/// The upper bound is the best distortion among Menger sign maps, plane charts
/// and classical scaling, refined by a fixed subgradient budget; for `k ≥ 2`
/// ellipsoidal norms are searched on a small grid.
pub fn iota_estimate(
    space: &MetricSpace,
    subset: &PointSet,
    q: f64,
    k: usize,
    opts: &IotaOptions,
) -> Result<IotaBracket> {
    check_q(q)?;
    if k == 0 {
        return Err(Error::Domain("ι needs k ≥ 1".into()));
    }
    let ids = subset.ids();
    let m = ids.len();
    let diam = space.diam(subset)?;
    if diam == 0.0 || m < 3 {
        // a pair maps isometrically to {0, d}
        let values = match m {
            2 => vec![pad(0.0, k), pad(diam, k)],
            _ => vec![pad(0.0, k); m],
        };
        return Ok(IotaBracket {
            lower: 0.0,
            upper: 0.0,
            kappa: None,
            upper_witness: Chart { source: "pair".into(), values },
            menger: None,
        });
    }
    let d = local_matrix(space, ids);
    let w = weights_of(space, ids);
    let mut candidates: Vec<Chart> = Vec::new();

    let mut menger_best: Option<EmbeddingWitness> = None;
    if k == 1 {
        for (p, qq) in menger::rank_anchor_pairs(space, subset, opts.anchor_c, opts.anchors)?.pairs {
            let wit = menger::menger_map(space, subset, p, qq)?;
            let better = menger_best.as_ref().is_none_or(|b| wit.l1_distortion < b.l1_distortion);
            candidates
                .push(Chart { source: format!("menger({p},{qq})"), values: wit.f.iter().map(|&v| vec![v]).collect() });
            if better {
                menger_best = Some(wit);
            }
        }
    }
    match space.ambient() {
        Ambient::Euclidean { dim } if k <= dim => {
            if let Ok(fit) = planes::fit_plane(space, subset, k, 2.0) {
                let values = ids.iter().map(|&i| fit.plane.coords(space.point(i))).collect();
                candidates.push(Chart { source: "plane-chart".into(), values });
            }
        }
        Ambient::Heisenberg { n } if k <= n => {
            if let Ok(fit) = heisenberg::fit_hplane(space, subset, q.min(2.0), k) {
                let values = ids.iter().map(|&i| fit.plane.chart_coords(space.point(i))).collect();
                candidates.push(Chart { source: "horizontal-chart".into(), values });
            }
        }
        _ => {}
    }
    candidates.push(Chart { source: "classical-scaling".into(), values: classical_scaling(&d, m, k) });

    let mut best: Option<(f64, Chart)> = None;
    for c in candidates {
        let v = distortion_local(&d, &w, &c.values, q, diam);
        if best.as_ref().is_none_or(|(b, _)| v < *b) {
            best = Some((v, c));
        }
    }
    let (mut upper, mut chart) = best.expect("classical scaling is always a candidate");
    if k >= 2 {
        if let Some((v, c)) = ellipsoid_search(&d, &w, &chart, q, diam) {
            if v < upper {
                upper = v;
                chart = c;
            }
        }
    }
    if opts.refine && q.is_finite() && q >= 1.0 {
        let (v, values) = refine(&d, &w, &chart.values, q, diam);
        if v < upper {
            upper = v;
            chart = Chart { source: format!("{}+refined", chart.source), values };
        }
    }
    let (lower, kappa) = if q == 1.0 && k == 1 {
        let kv = kappa(space, subset, &opts.kappa)?;
        (kv.raw / 3.0, Some(kv))
    } else {
        (0.0, None)
    };
    Ok(IotaBracket { lower, upper, kappa, upper_witness: chart, menger: menger_best })
}

fn pad(v: f64, k: usize) -> Vec<f64> {
    let mut out = vec![0.0; k];
    out[0] = v;
    out
}

/// Top-`k` coordinates of the double-centered squared distance matrix.
fn classical_scaling(d: &[f64], m: usize, k: usize) -> Vec<Vec<f64>> {
    let mut b = nalgebra::DMatrix::<f64>::from_fn(m, m, |i, j| -0.5 * d[i * m + j] * d[i * m + j]);
    let row_means: Vec<f64> = (0..m).map(|i| b.row(i).sum() / m as f64).collect();
    let total = row_means.iter().sum::<f64>() / m as f64;
    for i in 0..m {
        for j in 0..m {
            b[(i, j)] += total - row_means[i] - row_means[j];
        }
    }
    let eig = nalgebra::SymmetricEigen::new(b);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]).then(x.cmp(&y)));
    (0..m)
        .map(|i| {
            (0..k)
                .map(|c| {
                    let col = order.get(c).copied();
                    col.map_or(0.0, |col| {
                        let lam = eig.eigenvalues[col].max(0.0);
                        lam.sqrt() * eig.eigenvectors[(i, col)]
                    })
                })
                .collect()
        })
        .collect()
}

/// Ellipsoidal norms `|A^{1/2} v|` on the first two coordinates: composing the
/// chart with `A^{1/2}` turns the norm search into a linear-map search.
fn ellipsoid_search(d: &[f64], w: &[f64], chart: &Chart, q: f64, diam: f64) -> Option<(f64, Chart)> {
    let mut best: Option<(f64, Chart)> = None;
    for &ratio in &[0.5, 0.7, 1.4, 2.0] {
        for t in 0..4 {
            let th = std::f64::consts::FRAC_PI_4 * t as f64;
            let (c, s) = (th.cos(), th.sin());
            let sr = f64::sqrt(ratio);
            let values: Vec<Vec<f64>> = chart
                .values
                .iter()
                .map(|v| {
                    let mut out = v.clone();
                    // rotate, stretch the second axis, rotate back
                    let (x, y) = (c * v[0] + s * v[1], -s * v[0] + c * v[1]);
                    let y = sr * y;
                    out[0] = c * x - s * y;
                    out[1] = s * x + c * y;
                    out
                })
                .collect();
            let v = distortion_local(d, w, &values, q, diam);
            if best.as_ref().is_none_or(|(b, _)| v < *b) {
                best = Some((v, Chart { source: format!("{}+ellipsoid({ratio},{t})", chart.source), values }));
            }
        }
    }
    best
}

/// Normalized subgradient descent on the `L^q` distortion with a
/// `1/√(t+1)` step schedule; returns the best iterate.
fn refine(d: &[f64], w: &[f64], f0: &[Vec<f64>], q: f64, diam: f64) -> (f64, Vec<Vec<f64>>) {
    let m = w.len();
    let k = f0[0].len();
    let mut f = f0.to_vec();
    let mut best = (distortion_local(d, w, &f, q, diam), f.clone());
    for t in 0..REFINE_ITERS {
        let grads: Vec<Vec<f64>> = (0..m)
            .into_par_iter()
            .map(|a| {
                let mut g = vec![0.0; k];
                for b in 0..m {
                    if a == b {
                        continue;
                    }
                    let fd = euclid(&f[a], &f[b]);
                    if fd == 0.0 {
                        continue;
                    }
                    let e = fd - d[a * m + b];
                    if e == 0.0 {
                        continue;
                    }
                    let coef = w[b] * q * e.abs().powf(q - 1.0) * e.signum() / fd;
                    for c in 0..k {
                        g[c] += coef * (f[a][c] - f[b][c]);
                    }
                }
                g.iter_mut().for_each(|x| *x *= w[a]);
                g
            })
            .collect();
        let gmax = grads.iter().map(|g| g.iter().map(|x| x * x).sum::<f64>().sqrt()).fold(0.0, f64::max);
        if gmax == 0.0 {
            break;
        }
        let step = 0.02 * diam / ((t + 1) as f64).sqrt() / gmax;
        for a in 0..m {
            for c in 0..k {
                f[a][c] -= step * grads[a][c];
            }
        }
        let v = distortion_local(d, w, &f, q, diam);
        if v < best.0 {
            best = (v, f.clone());
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reals(xs: &[f64]) -> MetricSpace {
        let pts: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        MetricSpace::from_coords(&pts, Ambient::Euclidean { dim: 1 }, None, 1.0).unwrap()
    }

    fn plane2(pts: &[[f64; 2]]) -> MetricSpace {
        let v: Vec<Vec<f64>> = pts.iter().map(|p| p.to_vec()).collect();
        MetricSpace::from_coords(&v, Ambient::Euclidean { dim: 2 }, Some(vec![1.0; pts.len()]), 1.0).unwrap()
    }

    #[test]
    fn excess_examples() {
        assert_eq!(triangular_excess(&reals(&[0.0, 1.0, 3.0]), 0, 1, 2), 0.0);
        assert_eq!(excess_from_sides(1.0, 1.0, 1.0), 1.0);
        assert!((excess_from_sides(1.0, 1.0, 2f64.sqrt()) - (2.0 - 2f64.sqrt())).abs() < 1e-15);
        assert_eq!(triangular_excess(&reals(&[0.0, 1.0]), 0, 1, 1), 0.0);
    }

    #[test]
    fn menger_examples() {
        assert_eq!(menger_from_sides(1.0, 2.0, 3.0), 0.0);
        assert!((menger_from_sides(1.0, 1.0, 1.0) - 3f64.sqrt()).abs() < 1e-14);
        assert!((menger_from_sides(1.0, 1.0, 2f64.sqrt()) - 2f64.sqrt()).abs() < 1e-14);
        assert_eq!(menger_from_sides(0.0, 1.0, 1.0), 0.0);
    }

    #[test]
    fn beta_fixed_and_fitted() {
        let sp = plane2(&[[1.0, 0.1], [1.0, -0.1], [-1.0, 0.1], [-1.0, -0.1]]);
        let all = sp.all();
        let diam = sp.diam(&all).unwrap();
        let b = beta(&sp, &all, 2.0, &PlaneSource::EuclideanFamily { k: 1 }).unwrap();
        assert!((b.raw - 0.1 / diam).abs() < 1e-12, "{}", b.raw);
        assert!((b.raw - 0.0499).abs() < 1e-3);
        let axis = AffinePlane::new(vec![0.0, 0.0], vec![vec![1.0, 0.0]]).unwrap();
        let bf = beta(&sp, &all, 2.0, &PlaneSource::Affine(axis)).unwrap();
        assert!((bf.raw - b.raw).abs() < 1e-12);
        let single = PointSet::new(vec![0], 4).unwrap();
        assert!(beta(&sp, &single, 2.0, &PlaneSource::EuclideanFamily { k: 1 }).is_err());
    }

    #[test]
    fn kappa_examples() {
        let line = reals(&[0.0, 0.1, 0.5, 0.7, 1.0]);
        assert_eq!(kappa(&line, &line.all(), &KappaOptions::default()).unwrap().raw, 0.0);
        let two = reals(&[0.0, 1.0]);
        assert_eq!(kappa(&two, &two.all(), &KappaOptions::default()).unwrap().raw, 0.0);
    }

    #[test]
    fn kappa_exact_matches_naive_triple_sum() {
        let pts: Vec<[f64; 2]> = (0..12)
            .map(|i| {
                let a = i as f64 * 0.7;
                [a.cos() + 0.1 * (i % 3) as f64, a.sin()]
            })
            .collect();
        let sp = plane2(&pts);
        let all = sp.all();
        let diam = sp.diam(&all).unwrap();
        let mut naive = 0.0;
        for a in 0..12 {
            for b in 0..12 {
                for c in 0..12 {
                    naive += triangular_excess(&sp, a, b, c);
                }
            }
        }
        naive /= 12f64.powi(3) * diam;
        let got = kappa(&sp, &all, &KappaOptions::default()).unwrap().raw;
        assert!((got - naive).abs() < 1e-13 * naive.max(1.0));
    }

    #[test]
    fn iota_plane_collinear_and_bound() {
        let sp = plane2(&[[0.0, 0.0], [1.0, 0.0], [2.5, 0.0]]);
        let axis = AffinePlane::new(vec![0.0, 0.0], vec![vec![1.0, 0.0]]).unwrap();
        let v = iota_plane(&sp, &sp.all(), 1.0, &PlaneSource::Affine(axis.clone())).unwrap();
        assert_eq!(v.raw, 0.0);
        let sp = plane2(&[[0.0, 0.3], [1.0, -0.2], [2.5, 0.1], [0.4, 0.9]]);
        for q in [1.0, 2.0, f64::INFINITY] {
            let i = iota_plane(&sp, &sp.all(), q, &PlaneSource::Affine(axis.clone())).unwrap().raw;
            let b = beta(&sp, &sp.all(), q, &PlaneSource::Affine(axis.clone())).unwrap().raw;
            assert!(i <= 2.0 * b + 1e-9);
        }
        let abs = MetricSpace::from_matrix(&[vec![0.0, 1.0], vec![1.0, 0.0]], None, 1.0).unwrap();
        assert!(matches!(iota_plane(&abs, &abs.all(), 1.0, &PlaneSource::Affine(axis)), Err(Error::Ambient(_))));
    }

    #[test]
    fn iota_estimate_trivial_brackets() {
        let line = reals(&[0.0, 0.2, 0.3, 0.9, 1.0]);
        let b = iota_estimate(&line, &line.all(), 1.0, 1, &IotaOptions::default()).unwrap();
        assert!(b.lower == 0.0 && b.upper < 1e-12, "{b:?}");
        let two = reals(&[0.0, 2.0]);
        for k in 1..3 {
            let b = iota_estimate(&two, &two.all(), 1.0, k, &IotaOptions::default()).unwrap();
            assert_eq!((b.lower, b.upper), (0.0, 0.0));
        }
    }

    #[test]
    fn monte_carlo_is_schedule_independent() {
        let pts: Vec<[f64; 2]> = (0..40)
            .map(|i| {
                let a = std::f64::consts::TAU * i as f64 / 40.0;
                [a.cos(), a.sin()]
            })
            .collect();
        let sp = plane2(&pts);
        let ids = sp.all();
        let diam = sp.diam(&ids).unwrap();
        let a = kappa_monte_carlo(&sp, ids.ids(), diam, 10_000, 9).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| kappa_monte_carlo(&sp, ids.ids(), diam, 10_000, 9).unwrap());
        assert_eq!(a, b);
    }
}
