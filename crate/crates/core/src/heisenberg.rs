//! The Heisenberg group `H^n` with the Korányi distance, affine horizontal
//! planes, horizontal projections and the Pythagorean-type checks.
//!
//! Points are `(x, t)` with `x ∈ ℝ^{2n}`; the group law is
//! `(x,t)·(x',t') = (x + x', t + t' + ω(x,x'))` with
//! `ω(x,x') = ½ Σ_i (x_i x'_{n+i} − x_{n+i} x'_i)`, and
//! `d(p,p') = ‖p⁻¹·p'‖` where `‖(x,t)‖ = (|x|⁴ + 16t²)^{1/4}`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coeffs::weighted_power_mean;
use crate::dyadic::{CubeId, DyadicSystem};
use crate::error::{Error, Result};
use crate::linalg::{axpy, compass_search, dot, increasing_cubic_root, norm, sub};
use crate::planes::{angle_between_frames, TiltRatio};
use crate::space::{Ambient, MetricSpace, PointSet};

/// Tolerance for orthonormality and isotropy of plane frames.
pub const FRAME_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeisPoint {
    pub x: Vec<f64>,
    pub t: f64,
}

impl HeisPoint {
    pub fn new(x: Vec<f64>, t: f64) -> Result<Self> {
        if !x.len().is_multiple_of(2) || x.is_empty() {
            return Err(Error::Domain(format!("horizontal part must have even positive length, got {}", x.len())));
        }
        Ok(HeisPoint { x, t })
    }

    /// Reads `[x_1..x_2n, t]`.
    pub fn from_slice(c: &[f64]) -> Self {
        let (x, t) = c.split_at(c.len() - 1);
        HeisPoint { x: x.to_vec(), t: t[0] }
    }

    pub fn origin(n: usize) -> Self {
        HeisPoint { x: vec![0.0; 2 * n], t: 0.0 }
    }

    pub fn n(&self) -> usize {
        self.x.len() / 2
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.x.clone();
        v.push(self.t);
        v
    }
}

/// The symplectic form `ω`.
#[inline]
pub fn omega(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() / 2;
    let mut acc = 0.0;
    for i in 0..n {
        acc += x[i] * y[n + i] - x[n + i] * y[i];
    }
    0.5 * acc
}

/// `J` with `ω(x,y) = ½⟨x, Jy⟩`.
fn complex_structure(y: &[f64]) -> Vec<f64> {
    let n = y.len() / 2;
    let mut out = vec![0.0; y.len()];
    for i in 0..n {
        out[i] = y[n + i];
        out[n + i] = -y[i];
    }
    out
}

fn same_n(p: &HeisPoint, q: &HeisPoint) -> Result<()> {
    if p.x.len() != q.x.len() {
        return Err(Error::Domain(format!("H^{} vs H^{}", p.n(), q.n())));
    }
    Ok(())
}

pub fn heis_mul(p: &HeisPoint, q: &HeisPoint) -> Result<HeisPoint> {
    same_n(p, q)?;
    Ok(HeisPoint { x: p.x.iter().zip(&q.x).map(|(a, b)| a + b).collect(), t: p.t + q.t + omega(&p.x, &q.x) })
}

pub fn heis_inv(p: &HeisPoint) -> HeisPoint {
    HeisPoint { x: p.x.iter().map(|v| -v).collect(), t: -p.t }
}

pub fn koranyi_norm(p: &HeisPoint) -> f64 {
    norm4(dot(&p.x, &p.x), p.t)
}

#[inline]
fn norm4(x2: f64, t: f64) -> f64 {
    (x2 * x2 + 16.0 * t * t).sqrt().sqrt()
}

pub fn koranyi_dist(p: &HeisPoint, q: &HeisPoint) -> Result<f64> {
    same_n(p, q)?;
    Ok(koranyi_dist_slices(&p.to_vec(), &q.to_vec()))
}

/// Korányi distance on flat coordinates `[x, t]`.
#[inline]
pub fn koranyi_dist_slices(a: &[f64], b: &[f64]) -> f64 {
    let m = a.len() - 1;
    let (xa, xb) = (&a[..m], &b[..m]);
    let mut x2 = 0.0;
    for i in 0..m {
        let d = xb[i] - xa[i];
        x2 += d * d;
    }
    let dt = (b[m] - a[m]) - omega(xa, xb);
    norm4(x2, dt)
}

/// An affine horizontal `k`-plane `q·(V'×{0})` with `V'` isotropic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HorizontalPlane {
    base: HeisPoint,
    frame: Vec<Vec<f64>>,
}

impl HorizontalPlane {
    /// Validates an orthonormal isotropic frame.
    pub fn new(base: HeisPoint, frame: Vec<Vec<f64>>) -> Result<Self> {
        let dim = base.x.len();
        let n = dim / 2;
        if frame.is_empty() || frame.len() > n {
            return Err(Error::Domain(format!(
                "horizontal planes in H^{n} have dimension 1..={n}, got {}",
                frame.len()
            )));
        }
        for (i, v) in frame.iter().enumerate() {
            if v.len() != dim {
                return Err(Error::Domain(format!("frame vector {i} has length {}, expected {dim}", v.len())));
            }
            for (j, w) in frame.iter().enumerate().skip(i) {
                let target = if i == j { 1.0 } else { 0.0 };
                if (dot(v, w) - target).abs() > FRAME_TOL {
                    return Err(Error::Domain(format!("frame not orthonormal at ({i},{j})")));
                }
                if omega(v, w).abs() > FRAME_TOL {
                    return Err(Error::Domain(format!("frame not isotropic at ({i},{j})")));
                }
            }
        }
        Ok(HorizontalPlane { base, frame })
    }

    /// Orthonormalizes `dirs` with a symplectic Gram–Schmidt sweep (each new
    /// vector is made orthogonal to the previous `v_j` and `J v_j`).
    pub fn from_directions(base: HeisPoint, dirs: &[Vec<f64>]) -> Result<Self> {
        let frame = symplectic_gram_schmidt(dirs);
        if frame.len() != dirs.len() {
            return Err(Error::Degenerate("directions do not span an isotropic subspace of full rank".into()));
        }
        HorizontalPlane::new(base, frame)
    }

    pub fn line(base: HeisPoint, dir: Vec<f64>) -> Result<Self> {
        HorizontalPlane::from_directions(base, &[dir])
    }

    pub fn base(&self) -> &HeisPoint {
        &self.base
    }

    pub fn frame(&self) -> &[Vec<f64>] {
        &self.frame
    }

    pub fn n(&self) -> usize {
        self.base.n()
    }

    pub fn k(&self) -> usize {
        self.frame.len()
    }

    /// `q·(Σ s_i v_i, 0)`.
    pub fn point_at(&self, s: &[f64]) -> HeisPoint {
        let mut v = vec![0.0; self.base.x.len()];
        for (si, e) in s.iter().zip(&self.frame) {
            axpy(&mut v, *si, e);
        }
        let t = self.base.t + omega(&self.base.x, &v);
        HeisPoint { x: self.base.x.iter().zip(&v).map(|(a, b)| a + b).collect(), t }
    }

    /// Coordinates `π_{V'}([p] − [q])` in the frame; on the plane the
    /// Korányi distance is the Euclidean distance of these coordinates.
    pub fn chart_coords(&self, p: &[f64]) -> Vec<f64> {
        let u = sub(&p[..p.len() - 1], &self.base.x);
        self.frame.iter().map(|e| dot(e, &u)).collect()
    }

    /// Left translate `w·V`.
    pub fn translate(&self, w: &HeisPoint) -> Result<Self> {
        Ok(HorizontalPlane { base: heis_mul(w, &self.base)?, frame: self.frame.clone() })
    }

    fn check_point(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.base.x.len() + 1 {
            return Err(Error::Domain(format!("point of length {} in H^{}", p.len(), self.n())));
        }
        Ok(())
    }
}

pub fn symplectic_gram_schmidt(dirs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    let mut jout: Vec<Vec<f64>> = Vec::new();
    for d in dirs {
        let mut w = d.clone();
        for _ in 0..2 {
            for (e, je) in out.iter().zip(&jout) {
                let c = dot(&w, e);
                axpy(&mut w, -c, e);
                let c = dot(&w, je);
                axpy(&mut w, -c, je);
            }
        }
        let nw = norm(&w);
        if nw > 1e-10 * norm(d).max(1e-300) {
            let e: Vec<f64> = w.iter().map(|v| v / nw).collect();
            jout.push(complex_structure(&e));
            out.push(e);
        }
    }
    out
}

/// Horizontal projection onto an affine horizontal plane:
/// `P_V(p) = (v + [q], t_q + ω([q], v))` with `v = π_{V'}([p] − [q])`.
pub fn horiz_project(plane: &HorizontalPlane, p: &HeisPoint) -> Result<HeisPoint> {
    plane.check_point(&p.to_vec())?;
    Ok(project_slice(plane, &p.to_vec()))
}

pub(crate) fn project_slice(plane: &HorizontalPlane, p: &[f64]) -> HeisPoint {
    let m = p.len() - 1;
    let u = sub(&p[..m], &plane.base.x);
    let mut v = vec![0.0; m];
    for e in &plane.frame {
        axpy(&mut v, dot(e, &u), e);
    }
    let t = plane.base.t + omega(&plane.base.x, &v);
    HeisPoint { x: plane.base.x.iter().zip(&v).map(|(a, b)| a + b).collect(), t }
}

/// Distance from a point to a horizontal plane with the comparison bracket
/// `[2^{-5/4} d(p, P_V p), d(p, P_V p)]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlaneDistance {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Exact distance to an affine horizontal plane.
///
/// Along the chart `s ↦ q·(Σ s_i v_i, 0)` the fourth power of the distance is
/// `(c + |α − s|²)² + 16 (T − b·s)²`, a convex function. Its minimizer lies on
/// the line `s = α + σ b/|b|`, where `σ` solves an increasing cubic.
pub fn dist_to_hplane(plane: &HorizontalPlane, p: &HeisPoint) -> Result<PlaneDistance> {
    let c = p.to_vec();
    plane.check_point(&c)?;
    let (value, upper) = plane_distance_parts(plane, &c);
    Ok(PlaneDistance { value, lower: 2f64.powf(-1.25) * upper, upper })
}

/// `(d(p,V), d(p, P_V p))` for flat coordinates.
pub(crate) fn plane_distance_parts(plane: &HorizontalPlane, p: &[f64]) -> (f64, f64) {
    let m = p.len() - 1;
    let u = sub(&p[..m], &plane.base.x);
    let alpha: Vec<f64> = plane.frame.iter().map(|e| dot(e, &u)).collect();
    let u_norm2 = dot(&u, &u);
    let c = (u_norm2 - alpha.iter().map(|a| a * a).sum::<f64>()).max(0.0);
    let t0 = p[m] - plane.base.t - omega(&plane.base.x, &p[..m]);
    let b: Vec<f64> = plane.frame.iter().map(|e| omega(e, &u)).collect();
    let t1 = t0 - dot(&b, &alpha);
    let upper = norm4(c, t1);
    let bn = norm(&b);
    if bn == 0.0 {
        return (upper, upper);
    }
    let sigma = increasing_cubic_root(4.0, 4.0 * c + 32.0 * bn * bn, -32.0 * bn * t1);
    let value = norm4(c + sigma * sigma, t1 - bn * sigma).min(upper);
    (value, upper)
}

#[inline]
pub(crate) fn dist_to_plane_slice(plane: &HorizontalPlane, p: &[f64]) -> f64 {
    plane_distance_parts(plane, p).0
}

/// Angle between horizontal planes: the Euclidean angle of their isotropic
/// direction spaces.
pub fn angle_heis(v1: &HorizontalPlane, v2: &HorizontalPlane) -> Result<f64> {
    if v1.k() != v2.k() {
        return Err(Error::Domain(format!("angle between a {}-plane and a {}-plane", v1.k(), v2.k())));
    }
    if v1.n() != v2.n() {
        return Err(Error::Domain("planes live in different Heisenberg groups".into()));
    }
    Ok(angle_between_frames(&v1.frame, &v2.frame))
}

fn gate(plane: &HorizontalPlane, p1: &[f64], p2: &[f64], c: f64) -> Result<(f64, f64, f64)> {
    let d = koranyi_dist_slices(p1, p2);
    if d == 0.0 {
        return Err(Error::Precondition("points must be distinct".into()));
    }
    let d1 = dist_to_plane_slice(plane, p1);
    let d2 = dist_to_plane_slice(plane, p2);
    if d1 > c * d + 1e-12 || d2 > c * d + 1e-12 {
        return Err(Error::Precondition(format!("d(p_i, V) ≤ c·d(p1,p2) fails: {d1:.3e}, {d2:.3e} vs {:.3e}", c * d)));
    }
    Ok((d, d1, d2))
}

/// Single-plane Pythagoras residual
/// `d(p1,p2)² − d(P p1, P p2)² − N(1+c²)(d(p1,V) + d(p2,V))²`.
pub fn heis_pythagoras_check(
    plane: &HorizontalPlane,
    p1: &HeisPoint,
    p2: &HeisPoint,
    c: f64,
    big_n: f64,
) -> Result<f64> {
    let (a, b) = (p1.to_vec(), p2.to_vec());
    plane.check_point(&a)?;
    plane.check_point(&b)?;
    let (d, d1, d2) = gate(plane, &a, &b, c)?;
    let dp = koranyi_dist_slices(&project_slice(plane, &a).to_vec(), &project_slice(plane, &b).to_vec());
    Ok(d * d - dp * dp - big_n * (1.0 + c * c) * (d1 + d2).powi(2))
}

/// Smallest `N` for which the single-plane residual is nonpositive (`None`
/// when both points lie on the plane, where any `N` works).
pub fn heis_pythagoras_required(
    plane: &HorizontalPlane,
    p1: &HeisPoint,
    p2: &HeisPoint,
    c: f64,
) -> Result<Option<f64>> {
    let r0 = heis_pythagoras_check(plane, p1, p2, c, 0.0)?;
    let slack = heis_pythagoras_check(plane, p1, p2, c, 1.0)?;
    let unit = r0 - slack;
    Ok(if unit > 0.0 { Some((r0 / unit).max(0.0)) } else { None })
}

/// Two-plane residual
/// `d² − d(P_W x, P_W y)² − d²(∠(V,W) + N₀(1+c)(d(y,V) + d(x,V))/d)²`.
pub fn heis_two_plane_check(
    v: &HorizontalPlane,
    w: &HorizontalPlane,
    x: &HeisPoint,
    y: &HeisPoint,
    c: f64,
    n0: f64,
) -> Result<f64> {
    let (a, b) = (x.to_vec(), y.to_vec());
    v.check_point(&a)?;
    w.check_point(&b)?;
    let angle = angle_heis(v, w)?;
    let (d, dx, dy) = gate(v, &a, &b, c)?;
    let dp = koranyi_dist_slices(&project_slice(w, &a).to_vec(), &project_slice(w, &b).to_vec());
    Ok(d * d - dp * dp - d * d * (angle + n0 * (1.0 + c) * (dx + dy) / d).powi(2))
}

/// Smallest `N₀` making the two-plane residual nonpositive.
pub fn heis_two_plane_required(
    v: &HorizontalPlane,
    w: &HorizontalPlane,
    x: &HeisPoint,
    y: &HeisPoint,
    c: f64,
) -> Result<Option<f64>> {
    let (a, b) = (x.to_vec(), y.to_vec());
    let angle = angle_heis(v, w)?;
    let (d, dx, dy) = gate(v, &a, &b, c)?;
    let dp = koranyi_dist_slices(&project_slice(w, &a).to_vec(), &project_slice(w, &b).to_vec());
    let need = ((d * d - dp * dp).max(0.0)).sqrt() / d;
    if need <= angle {
        return Ok(Some(0.0));
    }
    let unit = (1.0 + c) * (dx + dy) / d;
    Ok(if unit > 0.0 { Some((need - angle) / unit) } else { None })
}

/// `ι₁(x, y, t) = (x, 0, …, 0; y, 0, …, 0, t)`.
pub fn embed_h1_to_hn(p: &HeisPoint, n: usize) -> Result<HeisPoint> {
    if p.n() != 1 {
        return Err(Error::Domain("ι₁ takes points of H^1".into()));
    }
    if n == 0 {
        return Err(Error::Domain("target H^n needs n ≥ 1".into()));
    }
    let mut x = vec![0.0; 2 * n];
    x[0] = p.x[0];
    x[n] = p.x[1];
    Ok(HeisPoint { x, t: p.t })
}

/// `ι₂(x₁, x₂) = (x₁, x₂, 0, …, 0)`, an isometry onto a horizontal plane for `n ≥ 2`.
pub fn embed_r2_to_hn(x: [f64; 2], n: usize) -> Result<HeisPoint> {
    if n < 2 {
        return Err(Error::Domain("ι₂ needs n ≥ 2 (span{e1,e2} is not isotropic in H^1)".into()));
    }
    let mut v = vec![0.0; 2 * n];
    v[0] = x[0];
    v[1] = x[1];
    Ok(HeisPoint { x: v, t: 0.0 })
}

/// Embeds an `H^1` horizontal plane into `H^n` through `ι₁`.
pub fn embed_h1_plane(plane: &HorizontalPlane, n: usize) -> Result<HorizontalPlane> {
    let base = embed_h1_to_hn(plane.base(), n)?;
    let frame = plane
        .frame()
        .iter()
        .map(|v| {
            let mut w = vec![0.0; 2 * n];
            w[0] = v[0];
            w[n] = v[1];
            w
        })
        .collect();
    HorizontalPlane::new(base, frame)
}

/// Horizontal lift of a planar polyline into `H^1`: each segment `a → b`
/// raises `t` by `ω(a, b)`.
pub fn horizontal_lift(polyline: &[[f64; 2]], t0: f64) -> Vec<HeisPoint> {
    let mut out = Vec::with_capacity(polyline.len());
    let mut t = t0;
    for (i, p) in polyline.iter().enumerate() {
        if i > 0 {
            let a = polyline[i - 1];
            t += omega(&a, p);
        }
        out.push(HeisPoint { x: p.to_vec(), t });
    }
    out
}

/// Horizontal plane returned by [`fit_hplane`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FittedHPlane {
    pub plane: HorizontalPlane,
    /// `β_{q,V}` of the subset for the returned plane.
    pub value: f64,
    /// Best value of the internal random-search baseline.
    pub baseline: f64,
    /// Local refinement was beaten by the baseline by more than a factor 2.
    pub baseline_flag: bool,
    /// Fits of dimension ≥ 2 are heuristic.
    pub approximate: bool,
}

fn require_heis(space: &MetricSpace) -> Result<usize> {
    match space.ambient() {
        Ambient::Heisenberg { n } => Ok(n),
        a => Err(Error::Ambient(format!("horizontal planes need a Heisenberg ambient, got {a}"))),
    }
}

/// `β_{q,V}(S)` for a horizontal plane.
pub fn beta_hplane(space: &MetricSpace, subset: &[usize], q: f64, plane: &HorizontalPlane, diam: f64) -> f64 {
    weighted_power_mean(subset.iter().map(|&i| (space.weight(i), dist_to_plane_slice(plane, space.point(i)) / diam)), q)
}

const FIT_MAX_EVALS: usize = 6000;
const BASELINE_TRIALS: usize = 200;

/// Fits a horizontal `k`-plane minimizing `β_q` on the subset by deterministic
/// multi-start compass search.
pub fn fit_hplane(space: &MetricSpace, subset: &PointSet, q: f64, k: usize) -> Result<FittedHPlane> {
    let n = require_heis(space)?;
    if k == 0 || k > n {
        return Err(Error::Domain(format!("horizontal k-planes in H^{n} need 1 ≤ k ≤ {n}")));
    }
    let ids = subset.ids();
    if ids.len() < 2 {
        return Err(Error::Degenerate("need at least two points to fit a plane".into()));
    }
    let diam = space.diam_of(ids);
    if diam == 0.0 {
        return Err(Error::Degenerate("all points coincide".into()));
    }
    let dim = 2 * n;
    let mass: f64 = space.mass(ids);

    // weighted shadow barycenter and principal directions
    let mut mean = vec![0.0; dim];
    for &i in ids {
        axpy(&mut mean, space.weight(i) / mass, &space.point(i)[..dim]);
    }
    let mut cov = nalgebra::DMatrix::<f64>::zeros(dim, dim);
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
    let principal: Vec<Vec<f64>> =
        order.iter().map(|&c| eig.eigenvectors.column(c).iter().copied().collect()).collect();

    let t_for_base = |bx: &[f64]| -> f64 {
        ids.iter()
            .map(|&i| {
                let p = space.point(i);
                space.weight(i) * (p[dim] - omega(bx, &p[..dim]))
            })
            .sum::<f64>()
            / mass
    };

    // parameter layout: [bx (dim), bt, frame (k*dim)]
    let decode = |x: &[f64]| -> Option<HorizontalPlane> {
        let base = HeisPoint { x: x[..dim].to_vec(), t: x[dim] };
        let dirs: Vec<Vec<f64>> = (0..k).map(|j| x[dim + 1 + j * dim..dim + 1 + (j + 1) * dim].to_vec()).collect();
        let frame = symplectic_gram_schmidt(&dirs);
        if frame.len() != k {
            return None;
        }
        Some(HorizontalPlane { base, frame })
    };
    let objective = |x: &[f64]| -> f64 {
        match decode(x) {
            Some(pl) => beta_hplane(space, ids, q, &pl, diam),
            None => f64::INFINITY,
        }
    };

    let mut starts: Vec<Vec<f64>> = Vec::new();
    let pack = |bx: &[f64], bt: f64, dirs: &[Vec<f64>]| -> Vec<f64> {
        let mut v = bx.to_vec();
        v.push(bt);
        for d in dirs {
            v.extend_from_slice(d);
        }
        v
    };
    let top: Vec<Vec<f64>> = principal.iter().take(k).cloned().collect();
    starts.push(pack(&mean, t_for_base(&mean), &top));
    for frac in [0usize, 1, 2, 3] {
        let i = ids[(frac * ids.len()) / 4];
        let p = space.point(i);
        starts.push(pack(&p[..dim], p[dim], &top));
        // direction towards the farthest shadow
        let far = ids
            .iter()
            .copied()
            .max_by(|&a, &b| {
                norm(&sub(&space.point(a)[..dim], &p[..dim]))
                    .total_cmp(&norm(&sub(&space.point(b)[..dim], &p[..dim])))
                    .then(b.cmp(&a))
            })
            .unwrap();
        let mut dirs = vec![sub(&space.point(far)[..dim], &p[..dim])];
        dirs.extend(principal.iter().take(k.saturating_sub(1)).cloned());
        if norm(&dirs[0]) > 0.0 {
            starts.push(pack(&p[..dim], p[dim], &dirs));
        }
    }

    let mut best: Option<(f64, Vec<f64>)> = None;
    for s in &starts {
        let r = compass_search(objective, s, 0.25 * diam, 1e-7 * diam, FIT_MAX_EVALS);
        if best.as_ref().is_none_or(|(v, _)| r.value < *v) {
            best = Some((r.value, r.x));
        }
    }
    let (mut value, mut params) = best.expect("at least one start");

    // random-search baseline: planes through a data point spanned towards other points
    let mut rng = ChaCha8Rng::seed_from_u64(0x6866_6974 ^ ids.len() as u64);
    let mut baseline = f64::INFINITY;
    let mut baseline_params = None;
    for _ in 0..BASELINE_TRIALS {
        let i = ids[rng.gen_range(0..ids.len())];
        let p = space.point(i);
        let dirs: Vec<Vec<f64>> = (0..k)
            .map(|_| {
                let j = ids[rng.gen_range(0..ids.len())];
                let d = sub(&space.point(j)[..dim], &p[..dim]);
                if norm(&d) > 0.0 {
                    d
                } else {
                    (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()
                }
            })
            .collect();
        let x = pack(&p[..dim], p[dim], &dirs);
        let v = objective(&x);
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
    Ok(FittedHPlane { plane, value, baseline, baseline_flag, approximate: k >= 2 })
}

/// Greedy `(k+1)`-point selection for Heisenberg data: start from the heaviest
/// point, then repeatedly take the point farthest from the horizontal plane
/// fitted (sup-norm) through the points chosen so far.
pub fn heis_independent_points(
    space: &MetricSpace,
    subset: &PointSet,
    k: usize,
) -> Result<crate::planes::IndependentPoints> {
    let n = require_heis(space)?;
    let ids = subset.ids();
    if k == 0 || k > n {
        return Err(Error::Domain(format!("need 1 ≤ k ≤ {n}")));
    }
    if ids.len() < k + 1 {
        return Err(Error::Domain(format!("need at least {} points, got {}", k + 1, ids.len())));
    }
    let diam = space.diam_of(ids);
    let first = crate::planes::heaviest(space, ids);
    let mut chosen = vec![first];
    let mut chain = Vec::with_capacity(k);
    for i in 1..=k {
        let dist_fn: Box<dyn Fn(usize) -> f64> = if i == 1 {
            Box::new(move |j| space.dist(first, j))
        } else {
            let sub_set = PointSet::from_sorted_unchecked(chosen.clone());
            let fit = fit_hplane(space, &sub_set, f64::INFINITY, i - 1)?;
            let plane = fit.plane;
            Box::new(move |j| dist_to_plane_slice(&plane, space.point(j)))
        };
        let (best, d) = ids
            .iter()
            .filter(|j| !chosen.contains(j))
            .map(|&j| (j, dist_fn(j)))
            .fold((usize::MAX, f64::NEG_INFINITY), |acc, (j, d)| if d > acc.1 { (j, d) } else { acc });
        chosen.push(best);
        chain.push(if diam > 0.0 { d / diam } else { 0.0 });
    }
    let score = chain.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(crate::planes::IndependentPoints { ids: chosen, chain, score, width_score: None, degenerate: score <= 1e-12 })
}

/// Tilting ratio `∠(V₁,V₀) / [λ₀^{k+1}(β₁(λ₁Q₁) + β₁(λ₀Q₀))]` with fitted
/// horizontal realizers.
pub fn heis_tilting_ratio(
    space: &MetricSpace,
    system: &DyadicSystem,
    q1: CubeId,
    q0: CubeId,
    lambda1: f64,
    lambda0: f64,
    k: usize,
) -> Result<TiltRatio> {
    require_heis(space)?;
    let (s1, s0) = crate::planes::tilting_sets(space, system, q1, q0, lambda1, lambda0)?;
    let fit = |s: &PointSet| -> Result<Option<FittedHPlane>> {
        if space.diam_of(s.ids()) == 0.0 {
            return Ok(None);
        }
        fit_hplane(space, s, 1.0, k).map(Some)
    };
    let (f1, f0) = (fit(&s1)?, fit(&s0)?);
    let (Some(f1), Some(f0)) = (f1, f0) else {
        return Ok(TiltRatio { ratio: 0.0, angle: 0.0, beta1: 0.0, beta0: 0.0, degenerate: true });
    };
    let angle = angle_heis(&f1.plane, &f0.plane)?;
    Ok(TiltRatio::new(angle, f1.value, f0.value, lambda0, k))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hp(x: f64, y: f64, t: f64) -> HeisPoint {
        HeisPoint { x: vec![x, y], t }
    }

    fn x_axis() -> HorizontalPlane {
        HorizontalPlane::line(HeisPoint::origin(1), vec![1.0, 0.0]).unwrap()
    }

    #[test]
    fn group_law() {
        assert_eq!(heis_mul(&hp(1.0, 0.0, 0.0), &hp(0.0, 1.0, 0.0)).unwrap(), hp(1.0, 1.0, 0.5));
        let p = hp(0.3, -1.2, 2.0);
        let e = heis_mul(&p, &heis_inv(&p)).unwrap();
        assert_eq!(e, HeisPoint::origin(1));
    }

    #[test]
    fn korányi_examples() {
        assert_eq!(koranyi_norm(&hp(0.0, 0.0, 1.0)), 2.0);
        let d = koranyi_dist(&HeisPoint::origin(1), &hp(3.0, 4.0, 0.0)).unwrap();
        assert!((d - 5.0).abs() < 1e-15);
        assert!(koranyi_dist(&HeisPoint::origin(1), &HeisPoint::origin(2)).is_err());
    }

    #[test]
    fn projection_examples() {
        assert_eq!(horiz_project(&x_axis(), &hp(3.0, 4.0, 5.0)).unwrap(), hp(3.0, 0.0, 0.0));
        let shifted = HorizontalPlane::line(hp(0.0, 1.0, 0.0), vec![1.0, 0.0]).unwrap();
        assert_eq!(horiz_project(&shifted, &hp(2.0, 0.0, 0.0)).unwrap(), hp(2.0, 1.0, -1.0));
        let on = shifted.point_at(&[0.7]);
        let pr = horiz_project(&shifted, &on).unwrap();
        assert!(koranyi_dist(&pr, &on).unwrap() < 1e-12);
    }

    #[test]
    fn distance_to_plane_examples() {
        let d = dist_to_hplane(&x_axis(), &hp(0.0, 0.0, 1.0)).unwrap();
        assert!((d.value - 2.0).abs() < 1e-14 && (d.upper - 2.0).abs() < 1e-14);
        let on = x_axis().point_at(&[1.5]);
        assert_eq!(dist_to_hplane(&x_axis(), &on).unwrap().value, 0.0);
    }

    #[test]
    fn distance_matches_dense_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let base = hp(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let pl = HorizontalPlane::line(base, vec![th.cos(), th.sin()]).unwrap();
            let p = hp(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let d = dist_to_hplane(&pl, &p).unwrap();
            // dense grid over the chart parameter, then local zoom
            let f = |s: f64| koranyi_dist(&pl.point_at(&[s]), &p).unwrap();
            let mut best = (f64::INFINITY, 0.0);
            let mut s = -12.0;
            while s <= 12.0 {
                let v = f(s);
                if v < best.0 {
                    best = (v, s);
                }
                s += 1e-3;
            }
            let (mut lo, mut hi) = (best.1 - 1e-3, best.1 + 1e-3);
            for _ in 0..100 {
                let (m1, m2) = (lo + (hi - lo) / 3.0, hi - (hi - lo) / 3.0);
                if f(m1) < f(m2) {
                    hi = m2
                } else {
                    lo = m1
                }
            }
            let grid = f(0.5 * (lo + hi)).min(best.0);
            assert!((d.value - grid).abs() < 1e-4, "{} vs {}", d.value, grid);
            assert!(d.value <= d.upper + 1e-12 && d.value >= d.lower - 1e-6);
        }
    }

    #[test]
    fn lift_examples() {
        let seg = horizontal_lift(&[[0.0, 0.0], [1.0, 0.0]], 0.0);
        assert_eq!(seg.last().unwrap(), &hp(1.0, 0.0, 0.0));
        let sq = horizontal_lift(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.0, 0.0]], 0.0);
        assert_eq!(sq.last().unwrap(), &hp(0.0, 0.0, 1.0));
        // every lifted segment is horizontal: distance equals the planar length
        for w in sq.windows(2) {
            assert!((koranyi_dist(&w[0], &w[1]).unwrap() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn embeddings() {
        let p = hp(1.0, 2.0, 3.0);
        let e = embed_h1_to_hn(&p, 3).unwrap();
        assert_eq!(e.x, vec![1.0, 0.0, 0.0, 2.0, 0.0, 0.0]);
        assert_eq!(e.t, 3.0);
        let a = embed_r2_to_hn([1.0, 2.0], 2).unwrap();
        assert!((koranyi_dist(&HeisPoint::origin(2), &a).unwrap() - 5f64.sqrt()).abs() < 1e-15);
        assert!(embed_r2_to_hn([1.0, 2.0], 1).is_err());
    }

    #[test]
    fn frames_must_be_isotropic() {
        // e1 and e_{n+1} pair symplectically
        assert!(HorizontalPlane::new(HeisPoint::origin(1), vec![vec![1.0, 0.0], vec![0.0, 1.0]]).is_err());
        let pl = HorizontalPlane::from_directions(
            HeisPoint::origin(2),
            &[vec![1.0, 0.0, 0.0, 0.0], vec![1.0, 1.0, 1.0, 0.0]],
        )
        .unwrap();
        assert_eq!(pl.k(), 2);
        assert!(omega(&pl.frame()[0], &pl.frame()[1]).abs() < 1e-15);
    }

    #[test]
    fn angles() {
        let y_axis = HorizontalPlane::line(HeisPoint::origin(1), vec![0.0, 1.0]).unwrap();
        assert!(angle_heis(&x_axis(), &x_axis()).unwrap().abs() < 1e-15);
        assert!((angle_heis(&x_axis(), &y_axis).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn pythagoras_on_plane_points() {
        let pl = x_axis();
        let (a, b) = (pl.point_at(&[0.0]), pl.point_at(&[2.0]));
        let r = heis_pythagoras_check(&pl, &a, &b, 0.25, 1.0).unwrap();
        assert!(r.abs() < 1e-12);
        let r2 = heis_two_plane_check(&pl, &pl, &a, &b, 0.25, 1.0).unwrap();
        assert!(r2.abs() < 1e-12);
        assert!(matches!(heis_pythagoras_check(&pl, &a, &hp(0.0, 0.0, 5.0), 0.25, 1.0), Err(Error::Precondition(_))));
    }
}
