//! Short connecting networks and spiral ball covers.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heisenberg::omega;
use crate::space::{euclid_dist, Ambient, MetricSpace, PointSet};

const BALL_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    /// Length of the realizing path.
    pub length: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub vertices: Vec<usize>,
    /// Corners of the vertical correction loops in Heisenberg paths.
    pub aux_nodes: usize,
    pub edges: Vec<Edge>,
    pub length: f64,
    pub connected: bool,
    /// Largest path length over distance among edges.
    pub quasiconvexity: f64,
}

impl Network {
    fn from_edges(mut vertices: Vec<usize>, edges: Vec<Edge>, aux_nodes: usize, space: &MetricSpace) -> Self {
        vertices.sort_unstable();
        vertices.dedup();
        let length = edges.iter().map(|e| e.length).sum();
        let quasiconvexity = edges
            .iter()
            .map(|e| {
                let d = space.dist(e.from, e.to);
                if d > 0.0 {
                    e.length / d
                } else {
                    1.0
                }
            })
            .fold(1.0, f64::max);
        let connected = is_connected(&vertices, &edges);
        Network { vertices, aux_nodes, edges, length, connected, quasiconvexity }
    }

    /// `length / (r · card^{(2D−1)/2D})`, with `card` the vertex count.
    pub fn ratio(&self, r: f64, d: f64) -> f64 {
        if self.length == 0.0 {
            return 0.0;
        }
        let card = self.vertices.len() as f64;
        self.length / (r * card.powf((2.0 * d - 1.0) / (2.0 * d)))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

fn is_connected(vertices: &[usize], edges: &[Edge]) -> bool {
    if vertices.len() <= 1 {
        return true;
    }
    let index = |v: usize| vertices.binary_search(&v).ok();
    let mut adj = vec![Vec::new(); vertices.len()];
    for e in edges {
        let (Some(a), Some(b)) = (index(e.from), index(e.to)) else { return false };
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; vertices.len()];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    while let Some(v) = queue.pop_front() {
        for &u in &adj[v] {
            if !seen[u] {
                seen[u] = true;
                queue.push_back(u);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// Length of the path used between two points and the number of auxiliary
/// nodes it adds. Heisenberg paths are a horizontal segment followed by a
/// square loop in the first coordinate plane whose signed area fixes `t`.
fn path_length(space: &MetricSpace, a: usize, b: usize) -> Result<(f64, usize)> {
    match space.ambient() {
        Ambient::Euclidean { .. } => Ok((space.dist(a, b), 0)),
        Ambient::Heisenberg { n } => {
            let (p, q) = (space.point(a), space.point(b));
            let (xp, xq) = (&p[..2 * n], &q[..2 * n]);
            let residual = q[2 * n] - p[2 * n] - omega(xp, xq);
            let horizontal = euclid_dist(xp, xq);
            if residual == 0.0 {
                Ok((horizontal, 0))
            } else {
                Ok((horizontal + 4.0 * residual.abs().sqrt(), 4))
            }
        }
        Ambient::Abstract => Err(Error::Ambient("paths need a Euclidean or Heisenberg ambient".into())),
    }
}

/// Network through `P ∪ {x}`: a greedy `ρ`-net with `ρ = r·card^{-1/2D}`,
/// a star from `x` to the net and an edge from every other point to its
/// nearest net point.
pub fn short_network(space: &MetricSpace, p: &PointSet, x: usize, r: f64, d: f64) -> Result<Network> {
    if !(d >= 1.0) {
        return Err(Error::Domain(format!("doubling parameter must be ≥ 1, got {d}")));
    }
    if !(r > 0.0) {
        return Err(Error::Domain(format!("radius must be positive, got {r}")));
    }
    if x >= space.len() {
        return Err(Error::Domain(format!("no point {x}")));
    }
    if let Some(y) = p.iter().find(|&y| space.dist(x, y) > r * (1.0 + BALL_TOL)) {
        return Err(Error::Precondition(format!("point {y} lies outside B({x}, {r})")));
    }
    let mut pts: Vec<usize> = std::iter::once(x).chain(p.iter().filter(|&y| y != x)).collect();
    if pts.len() == 1 {
        return Ok(Network::from_edges(pts, Vec::new(), 0, space));
    }
    let card = pts.len() as f64;
    let rho = r * card.powf(-1.0 / (2.0 * d));
    let mut net = vec![x];
    for &y in &pts[1..] {
        if net.iter().all(|&c| space.dist(c, y) >= rho) {
            net.push(y);
        }
    }
    let mut edges = Vec::with_capacity(pts.len() - 1);
    let mut aux = 0;
    let mut push = |a: usize, b: usize, edges: &mut Vec<Edge>| -> Result<()> {
        let (length, k) = path_length(space, a, b)?;
        aux += k;
        edges.push(Edge { from: a, to: b, length });
        Ok(())
    };
    for &c in &net[1..] {
        push(x, c, &mut edges)?;
    }
    for &y in &pts[1..] {
        if net.contains(&y) {
            continue;
        }
        let mut best = net[0];
        for &c in &net[1..] {
            if space.dist(c, y) < space.dist(best, y) {
                best = c;
            }
        }
        push(best, y, &mut edges)?;
    }
    pts.sort_unstable();
    Ok(Network::from_edges(pts, edges, aux, space))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: usize,
    pub radius: f64,
    /// Annulus index; 0 is the unit ball at `x₀`.
    pub k: i32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverCheck {
    pub covered: bool,
    /// Largest number of enlarged balls `tB` through one point.
    pub multiplicity: usize,
    /// `max_R Σ_{tB ∩ B_R(x₀) ≠ ∅} r(B) / R` over the radius grid.
    pub radius_sum_ratio: f64,
    /// `max d(center, x₀)/r(B)`.
    pub center_ratio: f64,
    /// `max_B #{B' : tB' ∩ tB ≠ ∅}`, within the finite domain.
    pub neighbors: usize,
    /// Smallest `M ≥ 2` for which all four properties hold.
    pub m: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallCover {
    pub x0: usize,
    pub t: f64,
    pub lambda: f64,
    pub balls: Vec<Ball>,
    pub check: CoverCheck,
}

/// Spiral cover around `x₀` with `λ = 2t + 1`: the unit ball at `x₀`, then
/// for every annulus `λ^{k−1} ≤ d(·, x₀) < λ^k` a maximal `λ^{k−3}`-separated
/// set of centers (greedy, ascending id) with radii `λ^{k−3}`.
pub fn spiral_cover(space: &MetricSpace, x0: usize, t: f64) -> Result<BallCover> {
    if !(t > 1.0 && t.is_finite()) {
        return Err(Error::Domain(format!("t must exceed 1, got {t}")));
    }
    if x0 >= space.len() {
        return Err(Error::Domain(format!("no point {x0}")));
    }
    let lambda = 2.0 * t + 1.0;
    let n = space.len();
    let r0: Vec<f64> = (0..n).map(|y| space.dist(x0, y)).collect();
    let far = r0.iter().copied().fold(0.0, f64::max);
    let mut balls = vec![Ball { center: x0, radius: 1.0, k: 0 }];
    let mut k = 1;
    while lambda.powi(k - 1) <= far {
        let (lo, hi, sep) = (lambda.powi(k - 1), lambda.powi(k), lambda.powi(k - 3));
        let mut centers: Vec<usize> = Vec::new();
        for y in (0..n).filter(|&y| r0[y] >= lo && r0[y] < hi) {
            if centers.iter().all(|&c| space.dist(c, y) >= sep) {
                centers.push(y);
            }
        }
        balls.extend(centers.into_iter().map(|c| Ball { center: c, radius: sep, k }));
        k += 1;
    }
    let check = check_cover(space, x0, t, lambda, &balls);
    Ok(BallCover { x0, t, lambda, balls, check })
}

/// Measures properties i)–iv) on the points of the space.
pub fn check_cover(space: &MetricSpace, x0: usize, t: f64, lambda: f64, balls: &[Ball]) -> CoverCheck {
    let n = space.len();
    let inside = |y: usize, b: &Ball, f: f64| space.dist(b.center, y) < f * b.radius;
    let covered = (0..n).into_par_iter().all(|y| balls.iter().any(|b| inside(y, b, 1.0)));
    // balls whose t-enlargement contains each point
    let through: Vec<Vec<usize>> =
        (0..n).into_par_iter().map(|y| (0..balls.len()).filter(|&i| inside(y, &balls[i], t)).collect()).collect();
    let multiplicity = through.iter().map(Vec::len).max().unwrap_or(0);
    let mut nb: Vec<Vec<usize>> = vec![Vec::new(); balls.len()];
    for list in &through {
        for &a in list {
            nb[a].extend(list.iter().copied());
        }
    }
    let neighbors = nb
        .into_iter()
        .map(|mut v| {
            v.sort_unstable();
            v.dedup();
            v.len()
        })
        .max()
        .unwrap_or(0);
    let center_ratio = balls.iter().map(|b| space.dist(b.center, x0) / b.radius).fold(0.0, f64::max);
    let far = (0..n).map(|y| space.dist(x0, y)).fold(0.0, f64::max);
    let mut radii = vec![1.0];
    let mut r = 1.0;
    while r <= far {
        r *= lambda.sqrt();
        radii.push(r);
    }
    let radius_sum_ratio = radii
        .par_iter()
        .map(|&big_r| {
            let sum: f64 = (0..balls.len())
                .filter(|&i| (0..n).any(|y| space.dist(x0, y) < big_r && inside(y, &balls[i], t)))
                .map(|i| balls[i].radius)
                .sum();
            sum / big_r
        })
        .reduce(|| 0.0, f64::max);
    let m = [2.0, multiplicity as f64 + 1.0, radius_sum_ratio, center_ratio, neighbors as f64]
        .into_iter()
        .fold(0.0, f64::max);
    CoverCheck { covered, multiplicity, radius_sum_ratio, center_ratio, neighbors, m }
}

/// Union of [`short_network`]s built inside every ball of a cover.
pub fn cover_network(space: &MetricSpace, cover: &BallCover, d: f64) -> Result<Network> {
    let mut vertices = Vec::new();
    let mut edges = Vec::new();
    let mut aux = 0;
    for b in &cover.balls {
        let members: Vec<usize> = (0..space.len()).filter(|&y| space.dist(b.center, y) < b.radius).collect();
        let net = short_network(space, &PointSet::from_sorted_unchecked(members), b.center, b.radius, d)?;
        vertices.extend(net.vertices);
        edges.extend(net.edges);
        aux += net.aux_nodes;
    }
    Ok(Network::from_edges(vertices, edges, aux, space))
}

/// Length of the segment `a → b` inside the closed ball `B(z, R)`.
fn clipped_length(a: &[f64], b: &[f64], z: &[f64], r: f64) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
    let f: Vec<f64> = a.iter().zip(z).map(|(x, y)| x - y).collect();
    let aa: f64 = d.iter().map(|v| v * v).sum();
    if aa == 0.0 {
        return 0.0;
    }
    let bb: f64 = 2.0 * d.iter().zip(&f).map(|(x, y)| x * y).sum::<f64>();
    let cc: f64 = f.iter().map(|v| v * v).sum::<f64>() - r * r;
    let disc = bb * bb - 4.0 * aa * cc;
    if disc <= 0.0 {
        return 0.0;
    }
    let s = disc.sqrt();
    let lo = ((-bb - s) / (2.0 * aa)).max(0.0);
    let hi = ((-bb + s) / (2.0 * aa)).min(1.0);
    (hi - lo).max(0.0) * aa.sqrt()
}

/// `max length(Γ ∩ B_R(z))/R` over the given centers and radii, for
/// networks of straight segments.
pub fn upper_regularity_ratio(space: &MetricSpace, net: &Network, centers: &[usize], radii: &[f64]) -> Result<f64> {
    if !matches!(space.ambient(), Ambient::Euclidean { .. }) {
        return Err(Error::Ambient("upper regularity is measured on Euclidean networks".into()));
    }
    let grid: Vec<(usize, f64)> = centers.iter().flat_map(|&z| radii.iter().map(move |&r| (z, r))).collect();
    Ok(grid
        .par_iter()
        .map(|&(z, r)| {
            let len: f64 = net
                .edges
                .iter()
                .map(|e| clipped_length(space.point(e.from), space.point(e.to), space.point(z), r))
                .sum();
            len / r
        })
        .reduce(|| 0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heisenberg::horizontal_lift;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn euclid(points: &[Vec<f64>]) -> MetricSpace {
        let d = points[0].len();
        MetricSpace::from_coords(points, Ambient::Euclidean { dim: d }, None, 1.0).unwrap()
    }

    #[test]
    fn singleton_network_is_empty() {
        let sp = euclid(&[vec![0.0, 0.0], vec![1.0, 0.0]]);
        let net = short_network(&sp, &PointSet::new(vec![0], 2).unwrap(), 0, 1.0, 1.0).unwrap();
        assert_eq!(net.length, 0.0);
        assert!(net.edges.is_empty() && net.connected);
    }

    #[test]
    fn two_points_one_segment() {
        let sp = euclid(&[vec![0.0, 0.0], vec![0.6, 0.8]]);
        let net = short_network(&sp, &sp.all(), 0, 1.0, 1.0).unwrap();
        assert_eq!(net.edges.len(), 1);
        assert!((net.length - 1.0).abs() < 1e-15 && net.length <= 2.0);
    }

    #[test]
    fn outside_ball_is_rejected() {
        let sp = euclid(&[vec![0.0], vec![2.0]]);
        assert!(matches!(short_network(&sp, &sp.all(), 0, 1.0, 1.0), Err(Error::Precondition(_))));
    }

    #[test]
    fn disc_network_is_connected_and_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut pts = vec![vec![0.0, 0.0]];
        while pts.len() < 101 {
            let (x, y): (f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            if x * x + y * y <= 1.0 {
                pts.push(vec![x, y]);
            }
        }
        let sp = euclid(&pts);
        let net = short_network(&sp, &sp.all(), 0, 1.0, 2.0).unwrap();
        assert!(net.connected);
        assert_eq!(net.edges.len(), 100);
        let sum: f64 = net.edges.iter().map(|e| e.length).sum();
        assert_eq!(net.length, sum);
        // star to the net plus one short edge per point
        assert!(net.ratio(1.0, 2.0) < 10.0);
        assert!(net.ratio(1.0, 3.0) <= net.ratio(1.0, 2.0));
    }

    #[test]
    fn heisenberg_paths_end_at_target() {
        let sp = MetricSpace::from_coords(
            &[vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 0.25]],
            Ambient::Heisenberg { n: 1 },
            None,
            1.0,
        )
        .unwrap();
        let (len, aux) = path_length(&sp, 0, 1).unwrap();
        assert_eq!(aux, 4);
        assert!((len - 3.0).abs() < 1e-15);
        // a square loop of side a changes t by its signed area a²
        let a = 0.5;
        let lift = horizontal_lift(&[[1.0, 0.0], [1.0 + a, 0.0], [1.0 + a, a], [1.0, a], [1.0, 0.0]], 0.0);
        assert!((lift.last().unwrap().t - a * a).abs() < 1e-15);
        assert!(len / sp.dist(0, 1) >= 1.0);
    }

    #[test]
    fn two_point_cover() {
        let sp = euclid(&[vec![0.0], vec![5.0]]);
        let c = spiral_cover(&sp, 0, 2.0).unwrap();
        assert!(c.balls.len() <= 2);
        assert!(c.check.covered);
    }

    #[test]
    fn long_line_cover_properties() {
        let pts: Vec<Vec<f64>> = (0..=1000).map(|i| vec![i as f64]).collect();
        let sp = euclid(&pts);
        let c = spiral_cover(&sp, 0, 2.0).unwrap();
        assert!(c.check.covered);
        assert!(c.check.m.is_finite());
        assert!(c.check.center_ratio <= c.lambda.powi(3));
    }

    #[test]
    fn clipping() {
        assert!((clipped_length(&[-2.0, 0.0], &[2.0, 0.0], &[0.0, 0.0], 1.0) - 2.0).abs() < 1e-15);
        assert_eq!(clipped_length(&[-2.0, 3.0], &[2.0, 3.0], &[0.0, 0.0], 1.0), 0.0);
        assert!((clipped_length(&[0.0, 0.0], &[2.0, 0.0], &[0.0, 0.0], 1.0) - 1.0).abs() < 1e-15);
    }
}
