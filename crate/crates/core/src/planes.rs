//! Euclidean affine planes: projections, fitting, angles, independent points,
//! and the two-plane Pythagoras, small-angle and tilting checks.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coeffs::{weighted_power_mean, ROUNDING_FLOOR};
use crate::dyadic::{CubeId, DyadicSystem};
use crate::error::{Error, Result};
use crate::linalg::{axpy, compass_search, dot, gram_schmidt, norm, sub};
use crate::space::{Ambient, MetricSpace, PointSet};

pub const FRAME_TOL: f64 = 1e-12;
const FIT_MAX_EVALS: usize = 4000;
const BASELINE_TRIALS: usize = 200;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffinePlane {
    base: Vec<f64>,
    frame: Vec<Vec<f64>>,
}

impl AffinePlane {
    /// Validates an orthonormal frame of `k ≤ n` vectors in ℝⁿ.
    pub fn new(base: Vec<f64>, frame: Vec<Vec<f64>>) -> Result<Self> {
        let n = base.len();
        if n == 0 || frame.len() > n {
            return Err(Error::Domain(format!("{}-plane in ℝ^{n}", frame.len())));
        }
        for (i, v) in frame.iter().enumerate() {
            if v.len() != n {
                return Err(Error::Domain(format!("frame vector {i} has length {}, expected {n}", v.len())));
            }
            for (j, w) in frame.iter().enumerate().skip(i) {
                let target = if i == j { 1.0 } else { 0.0 };
                if (dot(v, w) - target).abs() > FRAME_TOL {
                    return Err(Error::Domain(format!("frame not orthonormal at ({i},{j})")));
                }
            }
        }
        Ok(AffinePlane { base, frame })
    }

    /// Orthonormalizes the given directions.
    pub fn from_directions(base: Vec<f64>, dirs: &[Vec<f64>]) -> Result<Self> {
        let frame = gram_schmidt(dirs);
        if frame.len() != dirs.len() {
            return Err(Error::Degenerate("directions are linearly dependent".into()));
        }
        AffinePlane::new(base, frame)
    }

    pub fn base(&self) -> &[f64] {
        &self.base
    }

    pub fn frame(&self) -> &[Vec<f64>] {
        &self.frame
    }

    /// Ambient dimension.
    pub fn dim(&self) -> usize {
        self.base.len()
    }

    pub fn k(&self) -> usize {
        self.frame.len()
    }

    pub fn coords(&self, x: &[f64]) -> Vec<f64> {
        let u = sub(x, &self.base);
        self.frame.iter().map(|e| dot(e, &u)).collect()
    }

    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let mut out = self.base.clone();
        for (c, e) in self.coords(x).iter().zip(&self.frame) {
            axpy(&mut out, *c, e);
        }
        out
    }

    pub fn dist(&self, x: &[f64]) -> f64 {
        let mut r = sub(x, &self.base);
        for e in &self.frame {
            let c = dot(e, &r);
            axpy(&mut r, -c, e);
        }
        dot(&r, &r).sqrt()
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Domain(format!("point in ℝ^{} vs plane in ℝ^{}", x.len(), self.dim())));
        }
        Ok(())
    }
}

pub fn project(plane: &AffinePlane, x: &[f64]) -> Result<Vec<f64>> {
    plane.check(x)?;
    Ok(plane.project(x))
}

pub fn dist_to_plane(plane: &AffinePlane, x: &[f64]) -> Result<f64> {
    plane.check(x)?;
    Ok(plane.dist(x))
}

pub(crate) fn beta_plane(space: &MetricSpace, ids: &[usize], q: f64, plane: &AffinePlane, diam: f64) -> f64 {
    weighted_power_mean(
        ids.iter().map(|&i| {
            let d = plane.dist(space.point(i));
            (space.weight(i), if d <= ROUNDING_FLOOR * diam { 0.0 } else { d / diam })
        }),
        q,
    )
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FittedPlane {
    pub plane: AffinePlane,
    pub value: f64,
    /// Best value of the random-search baseline (`None` for exact least squares).
    pub baseline: Option<f64>,
    /// Set when the baseline beat the refined plane by more than a factor 2.
    pub baseline_flag: bool,
}

fn require_euclid(space: &MetricSpace) -> Result<usize> {
    match space.ambient() {
        Ambient::Euclidean { dim } => Ok(dim),
        a => Err(Error::Ambient(format!("Euclidean planes need a Euclidean ambient, got {a}"))),
    }
}

/// Weighted barycenter and principal directions (eigenvalues descending).
pub(crate) fn principal_frame(space: &MetricSpace, ids: &[usize], dim: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mass = space.mass(ids);
    let mut mean = vec![0.0; dim];
    for &i in ids {
        axpy(&mut mean, space.weight(i) / mass, &space.point(i)[..dim]);
    }
    let mut cov = DMatrix::<f64>::zeros(dim, dim);
    for &i in ids {
        let d = sub(&space.point(i)[..dim], &mean);
        let w = space.weight(i) / mass;
        for a in 0..dim {
            for b in 0..dim {
                cov[(a, b)] += w * d[a] * d[b];
            }
        }
    }
    let eig = nalgebra::SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let dirs = order.iter().map(|&c| eig.eigenvectors.column(c).iter().copied().collect()).collect();
    (mean, dirs)
}

/// Exponents used to warm-start fits for `q > 2`: the `L^q` objective is
/// smoother for moderate `q`, and its minimizer tracks the `q = ∞` one.
pub(crate) fn continuation(q: f64) -> Vec<f64> {
    if q <= 2.0 {
        vec![q]
    } else {
        let mut v: Vec<f64> = [4.0, 16.0, 64.0].into_iter().filter(|&s| s < q).collect();
        v.push(q);
        v
    }
}

/// Fits an affine `k`-plane to a subset for `β_q`.
///
/// `q = 2` is solved exactly by weighted least squares. Other exponents start
/// from the least-squares plane and refine with deterministic compass search;
/// a random-search baseline guards against poor local minima.
pub fn fit_plane(space: &MetricSpace, subset: &PointSet, k: usize, q: f64) -> Result<FittedPlane> {
    let dim = require_euclid(space)?;
    if k == 0 || k > dim {
        return Err(Error::Domain(format!("need 1 ≤ k ≤ {dim}, got {k}")));
    }
    let ids = subset.ids();
    if ids.len() < 2 {
        return Err(Error::Degenerate("need at least two points to fit a plane".into()));
    }
    let diam = space.diam_of(ids);
    if diam == 0.0 {
        return Err(Error::Degenerate("all points coincide".into()));
    }
    let (mean, principal) = principal_frame(space, ids, dim);
    let ls = AffinePlane::new(mean.clone(), principal[..k].to_vec())?;
    let ls_value = beta_plane(space, ids, q, &ls, diam);
    if q == 2.0 || k == dim || ls_value == 0.0 {
        return Ok(FittedPlane { plane: ls, value: ls_value, baseline: None, baseline_flag: false });
    }

    let pack = |base: &[f64], dirs: &[Vec<f64>]| -> Vec<f64> {
        let mut v = base.to_vec();
        for d in dirs {
            v.extend_from_slice(d);
        }
        v
    };
    let decode = |x: &[f64]| -> Option<AffinePlane> {
        let dirs: Vec<Vec<f64>> = (0..k).map(|j| x[dim + j * dim..dim + (j + 1) * dim].to_vec()).collect();
        let frame = gram_schmidt(&dirs);
        // the base may slide along the plane during the search; pin it at the foot of the mean
        (frame.len() == k).then(|| {
            let mut base = x[..dim].to_vec();
            let u = sub(&mean, &base);
            for e in &frame {
                axpy(&mut base, dot(e, &u), e);
            }
            AffinePlane { base, frame }
        })
    };
    let objective = |qq: f64| {
        move |x: &[f64]| -> f64 {
            match decode(x) {
                Some(p) => beta_plane(space, ids, qq, &p, diam),
                None => f64::INFINITY,
            }
        }
    };

    let mut starts = vec![pack(&mean, &principal[..k])];
    // directions spanned by far-apart points
    if k == 1 {
        let mut far: Vec<(f64, usize, usize)> = Vec::new();
        for (a, &i) in ids.iter().enumerate() {
            for &j in &ids[a + 1..] {
                far.push((space.dist(i, j), i, j));
            }
        }
        far.sort_by(|x, y| y.0.total_cmp(&x.0).then((x.1, x.2).cmp(&(y.1, y.2))));
        for &(_, i, j) in far.iter().take(3) {
            starts.push(pack(&mean, &[sub(space.point(j), space.point(i))]));
        }
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    for s in &starts {
        let mut x = s.clone();
        let mut step = 0.25 * diam;
        for &qq in &continuation(q) {
            let r = compass_search(objective(qq), &x, step, 1e-9 * diam, FIT_MAX_EVALS);
            x = r.x;
            step = 0.05 * diam;
        }
        let v = objective(q)(&x);
        if best.as_ref().is_none_or(|(b, _)| v < *b) {
            best = Some((v, x));
        }
    }
    let (mut value, mut params) = best.expect("at least one start");
    if ls_value < value {
        value = ls_value;
        params = pack(&mean, &principal[..k]);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0x706c_616e ^ ids.len() as u64);
    let mut baseline = f64::INFINITY;
    let mut baseline_params = None;
    for _ in 0..BASELINE_TRIALS {
        let p = space.point(ids[rng.gen_range(0..ids.len())]).to_vec();
        let dirs: Vec<Vec<f64>> = (0..k)
            .map(|_| {
                let d = sub(space.point(ids[rng.gen_range(0..ids.len())]), &p);
                if norm(&d) > 0.0 {
                    d
                } else {
                    (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()
                }
            })
            .collect();
        let x = pack(&p, &dirs);
        let v = objective(q)(&x);
        if v < baseline {
            baseline = v;
            baseline_params = Some(x);
        }
    }
    let baseline_flag = baseline * 2.0 < value;
    if baseline < value {
        value = baseline;
        params = baseline_params.expect("baseline evaluated");
    }
    let plane = decode(&params).ok_or_else(|| Error::Degenerate("fitted frame collapsed".into()))?;
    Ok(FittedPlane { plane, value, baseline: Some(baseline), baseline_flag })
}

/// Sine of the largest principal angle between the spans of two orthonormal
/// frames: `√(1 − σ_min²)` for the singular values of `F₁ᵀF₂`.
pub fn angle_between_frames(f1: &[Vec<f64>], f2: &[Vec<f64>]) -> f64 {
    let k = f1.len();
    let m = DMatrix::<f64>::from_fn(k, k, |i, j| dot(&f1[i], &f2[j]));
    let sv = m.singular_values();
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min).clamp(0.0, 1.0);
    (1.0 - smin * smin).max(0.0).sqrt()
}

pub fn angle_euclid(v1: &AffinePlane, v2: &AffinePlane) -> Result<f64> {
    if v1.k() != v2.k() || v1.dim() != v2.dim() {
        return Err(Error::Domain(format!(
            "angle between a {}-plane in ℝ^{} and a {}-plane in ℝ^{}",
            v1.k(),
            v1.dim(),
            v2.k(),
            v2.dim()
        )));
    }
    Ok(angle_between_frames(&v1.frame, &v2.frame))
}

/// `|x−y|² − |π₂x − π₂y|² − (|x−y|∠(V₁,V₂) + d(y,V₁) + d(x,V₁))²`, never positive.
pub fn two_plane_pythagoras_check(v1: &AffinePlane, v2: &AffinePlane, x: &[f64], y: &[f64]) -> Result<f64> {
    let angle = angle_euclid(v1, v2)?;
    v1.check(x)?;
    v1.check(y)?;
    let d = norm(&sub(x, y));
    if d == 0.0 {
        return Err(Error::Domain("points must be distinct".into()));
    }
    let dp = norm(&sub(&v2.project(x), &v2.project(y)));
    Ok(d * d - dp * dp - (d * angle + v1.dist(y) + v1.dist(x)).powi(2))
}

/// Smallest `C_P ≥ 1` for which the planes-system Pythagoras inequality
/// `d² ≤ d(π_W x, π_W y)² + C_P²(∠ d + d(x,V) + d(y,V))²` holds at this
/// configuration, or `None` when the gate `max d(·,V) ≤ C_P^{-1} d` fails at
/// `C_P = 1`.
pub fn pythagoras_constant_required(v: &AffinePlane, w: &AffinePlane, x: &[f64], y: &[f64]) -> Result<Option<f64>> {
    let angle = angle_euclid(v, w)?;
    let d = norm(&sub(x, y));
    if d == 0.0 {
        return Err(Error::Domain("points must be distinct".into()));
    }
    let (dx, dy) = (v.dist(x), v.dist(y));
    if dx.max(dy) > d {
        return Ok(None);
    }
    let dp = norm(&sub(&w.project(x), &w.project(y)));
    let need = (d * d - dp * dp).max(0.0).sqrt();
    let have = angle * d + dx + dy;
    Ok(Some(if need == 0.0 {
        1.0
    } else if have == 0.0 {
        f64::INFINITY
    } else {
        (need / have).max(1.0)
    }))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IndependentPoints {
    pub ids: Vec<usize>,
    /// `d(x_i, span(x_0..x_{i−1}))/diam` for `i = 1..=k`.
    pub chain: Vec<f64>,
    /// Minimum of the chain.
    pub score: f64,
    /// `min_W max_i d(x_i, W)/diam` over `(k−1)`-planes `W` of their span.
    pub width_score: Option<f64>,
    pub degenerate: bool,
}

pub(crate) fn heaviest(space: &MetricSpace, ids: &[usize]) -> usize {
    ids.iter()
        .copied()
        .fold(
            (usize::MAX, f64::NEG_INFINITY),
            |acc, i| if space.weight(i) > acc.1 { (i, space.weight(i)) } else { acc },
        )
        .0
}

/// Greedy independent points: the heaviest point, then repeatedly the point
/// farthest from the affine span of those chosen.
pub fn independent_points(space: &MetricSpace, subset: &PointSet, k: usize) -> Result<IndependentPoints> {
    let dim = require_euclid(space)?;
    let ids = subset.ids();
    if k == 0 || k > dim {
        return Err(Error::Domain(format!("need 1 ≤ k ≤ {dim}")));
    }
    if ids.len() < k + 1 {
        return Err(Error::Domain(format!("need at least {} points, got {}", k + 1, ids.len())));
    }
    let diam = space.diam_of(ids);
    let mut chosen = vec![heaviest(space, ids)];
    let mut chain = Vec::with_capacity(k);
    for _ in 0..k {
        let pts: Vec<&[f64]> = chosen.iter().map(|&i| space.point(i)).collect();
        let (best, d) = ids
            .iter()
            .filter(|j| !chosen.contains(j))
            .map(|&j| (j, crate::linalg::dist_to_affine_span(&pts, space.point(j))))
            .fold((usize::MAX, f64::NEG_INFINITY), |acc, (j, d)| if d > acc.1 { (j, d) } else { acc });
        chosen.push(best);
        chain.push(if diam > 0.0 { d / diam } else { 0.0 });
    }
    let score = chain.iter().copied().fold(f64::INFINITY, f64::min);
    let pts: Vec<Vec<f64>> = chosen.iter().map(|&i| space.point(i).to_vec()).collect();
    let width = independence_score(&pts);
    let degenerate = score <= 1e-12;
    Ok(IndependentPoints {
        ids: chosen,
        chain,
        score: if degenerate { 0.0 } else { score },
        width_score: Some(if diam > 0.0 && !degenerate { width / diam } else { 0.0 }),
        degenerate,
    })
}

/// `min_W max_i d(y_i, W)` over `(k−1)`-dimensional affine subspaces `W` of the
/// span of `k+1` points: half the minimal width of the simplex, attained at a
/// split of the vertices into two complementary faces.
pub fn independence_score(points: &[Vec<f64>]) -> f64 {
    let m = points.len();
    if m < 2 {
        return 0.0;
    }
    let span = gram_schmidt(&points[1..].iter().map(|p| sub(p, &points[0])).collect::<Vec<_>>());
    if span.len() + 1 < m {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    // splits with vertex 0 on side A; the other side is nonempty
    for mask in 0u64..(1u64 << (m - 1)) - 1 {
        let (mut a, mut b) = (vec![0usize], Vec::new());
        for i in 1..m {
            if mask >> (i - 1) & 1 == 1 {
                a.push(i);
            } else {
                b.push(i);
            }
        }
        let mut dirs: Vec<Vec<f64>> = a[1..].iter().map(|&i| sub(&points[i], &points[a[0]])).collect();
        dirs.extend(b[1..].iter().map(|&i| sub(&points[i], &points[b[0]])));
        let frame = gram_schmidt(&dirs);
        let gap = sub(&points[b[0]], &points[a[0]]);
        let along = crate::linalg::project_onto_frame(&frame, &gap);
        best = best.min(norm(&sub(&gap, &along)));
    }
    0.5 * best
}

/// Returns `∠(V₁,V₂)/ε` after checking that the `y_i ∈ V₁` are independent at
/// scale `c·r` and have nearly isometric projections onto `V₂`.
pub fn small_angle_bound(v1: &AffinePlane, v2: &AffinePlane, ys: &[Vec<f64>], c: f64, eps: f64) -> Result<f64> {
    let angle = angle_euclid(v1, v2)?;
    let k = v1.k();
    if !(eps > 0.0 && eps < 1.0) || !(c > 0.0) {
        return Err(Error::Domain("need ε ∈ (0,1) and c > 0".into()));
    }
    if ys.len() != k + 1 {
        return Err(Error::Precondition(format!("need {} points, got {}", k + 1, ys.len())));
    }
    let mut r: f64 = 0.0;
    for (i, y) in ys.iter().enumerate() {
        v1.check(y)?;
        if v1.dist(y) > 1e-9 * (1.0 + norm(y)) {
            return Err(Error::Precondition(format!("y_{i} is not on V₁")));
        }
        for z in &ys[i + 1..] {
            r = r.max(norm(&sub(y, z)));
        }
    }
    if independence_score(ys) <= c * r {
        return Err(Error::Precondition("points are not c·r-independent".into()));
    }
    for (i, y) in ys.iter().enumerate() {
        for z in &ys[i + 1..] {
            let d2 = dot(&sub(y, z), &sub(y, z));
            let p = sub(&v2.project(y), &v2.project(z));
            if d2 > (1.0 + eps * eps) * dot(&p, &p) * (1.0 + 1e-12) {
                return Err(Error::Precondition("projections onto V₂ are not (1+ε²)-isometric".into()));
            }
        }
    }
    Ok(angle / eps)
}

/// Tilting ratio with the `0/0 → 0` convention.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TiltRatio {
    pub ratio: f64,
    pub angle: f64,
    pub beta1: f64,
    pub beta0: f64,
    /// Set for the `0/0` case, which calibrations skip.
    pub degenerate: bool,
}

impl TiltRatio {
    pub fn new(angle: f64, beta1: f64, beta0: f64, lambda0: f64, k: usize) -> Self {
        let den = lambda0.powi(k as i32 + 1) * (beta1 + beta0);
        if den == 0.0 {
            if angle <= 1e-12 {
                return TiltRatio { ratio: 0.0, angle, beta1, beta0, degenerate: true };
            }
            return TiltRatio { ratio: f64::INFINITY, angle, beta1, beta0, degenerate: false };
        }
        TiltRatio { ratio: angle / den, angle, beta1, beta0, degenerate: false }
    }
}

/// `(λ₁Q₁, λ₀Q₀)` after checking levels and containment.
pub(crate) fn tilting_sets(
    space: &MetricSpace,
    system: &DyadicSystem,
    q1: CubeId,
    q0: CubeId,
    lambda1: f64,
    lambda0: f64,
) -> Result<(PointSet, PointSet)> {
    if q1 >= system.len() || q0 >= system.len() {
        return Err(Error::Domain("cube id out of range".into()));
    }
    let (l1, l0) = (system.cube(q1).level, system.cube(q0).level);
    if !(l0 == l1 || l0 + 1 == l1) {
        return Err(Error::Precondition(format!("Q₀ must be at level {l1} or {}, got {l0}", l1 - 1)));
    }
    if !(lambda1 >= 1.0 && lambda0 >= 1.0) {
        return Err(Error::Domain("λ₀, λ₁ must be ≥ 1".into()));
    }
    let s1 = system.enlarge(space, q1, lambda1)?;
    let s0 = system.enlarge(space, q0, lambda0)?;
    if !s1.iter().all(|p| s0.ids().binary_search(&p).is_ok()) {
        return Err(Error::Precondition("λ₁Q₁ ⊄ λ₀Q₀".into()));
    }
    Ok((s1, s0))
}

/// `∠(V₁,V₀) / [λ₀^{k+1}(β₁(λ₁Q₁) + β₁(λ₀Q₀))]` with fitted `L¹` realizers.
pub fn euclid_tilting_ratio(
    space: &MetricSpace,
    system: &DyadicSystem,
    q1: CubeId,
    q0: CubeId,
    lambda1: f64,
    lambda0: f64,
    k: usize,
) -> Result<TiltRatio> {
    require_euclid(space)?;
    let (s1, s0) = tilting_sets(space, system, q1, q0, lambda1, lambda0)?;
    if space.diam_of(s1.ids()) == 0.0 || space.diam_of(s0.ids()) == 0.0 || s1.len() <= k || s0.len() <= k {
        return Ok(TiltRatio { ratio: 0.0, angle: 0.0, beta1: 0.0, beta0: 0.0, degenerate: true });
    }
    let f1 = fit_plane(space, &s1, k, 1.0)?;
    let f0 = fit_plane(space, &s0, k, 1.0)?;
    let angle = angle_euclid(&f1.plane, &f0.plane)?;
    Ok(TiltRatio::new(angle, f1.value, f0.value, lambda0, k))
}
