//! Maps into ℝ built from two anchor points, and the four-point machinery
//! (circularity, the four-point dichotomy, attraction to circular points).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coeffs::{excess_from_sides, local_matrix, set_excess};
use crate::error::{Error, Result};
use crate::space::{MetricSpace, PointSet};

pub const DEFAULT_ANCHOR_C: f64 = 16.0;
/// Float slack in the betweenness test.
pub const BETWEEN_TOL: f64 = 1e-9;

fn tol(scale: f64) -> f64 {
    1e-9 * (1.0 + scale)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingWitness {
    /// Subset ids, in the order of `f`.
    pub ids: Vec<usize>,
    pub f: Vec<f64>,
    pub anchors: (usize, usize),
    /// `μ⊗μ`-average of `||f(x) − f(y)| − d(x,y)| / diam`.
    pub l1_distortion: f64,
    /// `max ||f(x) − f(y)| − d(x,y)|`.
    pub linf_distortion: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircularityReport {
    pub ids: [usize; 4],
    pub eta_min: f64,
}

/// `[xyz]`: `y` lies between `x` and `z` up to [`BETWEEN_TOL`].
pub fn between(space: &MetricSpace, x: usize, y: usize, z: usize) -> bool {
    space.dist(x, z) >= space.dist(x, y).max(space.dist(y, z)) - BETWEEN_TOL
}

/// Sign map: `f(P) = 0`, `f(Q) = d(P,Q)`, and `f(x) = −d(x,P)` when `[xPQ]`,
/// `+d(x,P)` otherwise.
pub fn menger_map(space: &MetricSpace, subset: &PointSet, p: usize, q: usize) -> Result<EmbeddingWitness> {
    if p == q {
        return Err(Error::Domain("anchors must differ".into()));
    }
    if !subset.contains(p) || !subset.contains(q) {
        return Err(Error::Domain("anchors must belong to the subset".into()));
    }
    let ids = subset.ids().to_vec();
    let f: Vec<f64> = ids
        .iter()
        .map(|&x| {
            if x == p {
                0.0
            } else if x == q {
                space.dist(p, q)
            } else if between(space, x, p, q) {
                -space.dist(x, p)
            } else {
                space.dist(x, p)
            }
        })
        .collect();
    let (l1, linf) = map_distortions(space, &ids, &f);
    Ok(EmbeddingWitness { ids, f, anchors: (p, q), l1_distortion: l1, linf_distortion: linf })
}

/// `(L¹ distortion / diam, sup distortion)` of a real-valued map.
pub fn map_distortions(space: &MetricSpace, ids: &[usize], f: &[f64]) -> (f64, f64) {
    let m = ids.len();
    let diam = space.diam_of(ids);
    let rows: Vec<(f64, f64)> = (0..m)
        .into_par_iter()
        .map(|a| {
            let (mut s, mut mx) = (0.0, 0.0f64);
            for b in 0..m {
                let e = ((f[a] - f[b]).abs() - space.dist(ids[a], ids[b])).abs();
                s += space.weight(ids[b]) * e;
                mx = mx.max(e);
            }
            (space.weight(ids[a]) * s, mx)
        })
        .collect();
    let mu = space.mass(ids);
    let sum: f64 = rows.iter().map(|r| r.0).sum();
    let linf = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let l1 = if diam > 0.0 { sum / (mu * mu * diam) } else { 0.0 };
    (l1, linf)
}

/// Excess functionals used to pick anchors, all normalized by `diam`:
/// `A₂(P,Q) = μ⁻¹ Σ_x w ∂{P,Q,x}`, `A₁(P) = μ⁻¹ Σ_Q w A₂(P,Q)` and the global
/// `β = μ⁻¹ Σ_P w A₁(P)`, which is κ of the subset.
#[derive(Clone, Debug)]
pub struct AnchorFunctionals {
    pub ids: Vec<usize>,
    pub a2: Vec<f64>,
    pub a1: Vec<f64>,
    pub beta: f64,
}

pub fn anchor_functionals(space: &MetricSpace, subset: &PointSet) -> Result<AnchorFunctionals> {
    let ids = subset.ids().to_vec();
    let m = ids.len();
    if m < 2 {
        return Err(Error::Domain("anchor selection needs at least two points".into()));
    }
    let diam = space.diam_of(&ids);
    let d = local_matrix(space, &ids);
    let w: Vec<f64> = ids.iter().map(|&i| space.weight(i)).collect();
    let mu: f64 = w.iter().sum();
    let norm = if diam > 0.0 { mu * diam } else { f64::INFINITY };
    let a2: Vec<f64> = (0..m)
        .into_par_iter()
        .flat_map_iter(|a| {
            let d = &d;
            let w = &w;
            (0..m).map(move |b| {
                let mut s = 0.0;
                for c in 0..m {
                    s += w[c] * excess_from_sides(d[a * m + b], d[b * m + c], d[a * m + c]);
                }
                s / norm
            })
        })
        .collect();
    let a1: Vec<f64> = (0..m).map(|a| (0..m).map(|b| w[b] * a2[a * m + b]).sum::<f64>() / mu).collect();
    let beta = (0..m).map(|a| w[a] * a1[a]).sum::<f64>() / mu;
    Ok(AnchorFunctionals { ids, a2, a1, beta })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AnchorRanking {
    /// Candidate pairs, best first.
    pub pairs: Vec<(usize, usize)>,
    pub beta: f64,
    /// No pair passed the excess tests; pairs are ranked by distance only.
    pub fallback: bool,
}

/// Ranks anchor pairs: pairs with `A₁(P), A₁(Q), A₂(P,Q) ≤ Cβ` first, then the
/// rest, each group by decreasing distance. Returns at most `count` pairs.
pub fn rank_anchor_pairs(space: &MetricSpace, subset: &PointSet, c: f64, count: usize) -> Result<AnchorRanking> {
    let af = anchor_functionals(space, subset)?;
    let m = af.ids.len();
    let bound = c * af.beta + 1e-12;
    let mut all: Vec<(bool, f64, usize, usize)> = Vec::with_capacity(m * (m - 1) / 2);
    for a in 0..m {
        for b in a + 1..m {
            let pass = af.a1[a] <= bound && af.a1[b] <= bound && af.a2[a * m + b] <= bound;
            all.push((pass, space.dist(af.ids[a], af.ids[b]), af.ids[a], af.ids[b]));
        }
    }
    all.sort_by(|x, y| y.0.cmp(&x.0).then(y.1.total_cmp(&x.1)).then((x.2, x.3).cmp(&(y.2, y.3))));
    let fallback = !all.first().is_some_and(|p| p.0);
    Ok(AnchorRanking { pairs: all.iter().take(count.max(1)).map(|p| (p.2, p.3)).collect(), beta: af.beta, fallback })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AnchorSelection {
    pub p: usize,
    pub q: usize,
    pub beta: f64,
    pub fallback: bool,
}

/// The farthest pair passing the excess tests with constant `c`, or the
/// farthest pair overall with `fallback` set.
pub fn select_anchors(space: &MetricSpace, subset: &PointSet, c: f64) -> Result<AnchorSelection> {
    let r = rank_anchor_pairs(space, subset, c, 1)?;
    let (p, q) = r.pairs[0];
    Ok(AnchorSelection { p, q, beta: r.beta, fallback: r.fallback })
}

fn distinct4(ids: [usize; 4], n: usize) -> Result<()> {
    for (i, &a) in ids.iter().enumerate() {
        if a >= n {
            return Err(Error::Domain(format!("id {a} out of range")));
        }
        if ids[i + 1..].contains(&a) {
            return Err(Error::Domain("quadruple has repeated points".into()));
        }
    }
    Ok(())
}

/// Largest gap between complementary pair distances over the three splits.
pub fn circularity(space: &MetricSpace, ids: [usize; 4]) -> Result<CircularityReport> {
    distinct4(ids, space.len())?;
    let d = |a: usize, b: usize| space.dist(ids[a], ids[b]);
    let eta = (d(0, 1) - d(2, 3)).abs().max((d(0, 2) - d(1, 3)).abs()).max((d(0, 3) - d(1, 2)).abs());
    Ok(CircularityReport { ids, eta_min: eta })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "branch", rename_all = "kebab-case")]
pub enum FourPointOutcome {
    Isometry(EmbeddingWitness),
    Circular(CircularityReport),
}

/// Four-point dichotomy: with `∂{P,Q,R,S} ≤ β` and `d(P,Q) > 2β`, the sign
/// map is a `2β`-isometry or the points are `2β`-circular.
pub fn four_point_embed(space: &MetricSpace, ids: [usize; 4], beta: f64) -> Result<FourPointOutcome> {
    distinct4(ids, space.len())?;
    let [p, q, _, _] = ids;
    let scale = ids.iter().map(|&a| space.dist(p, a)).fold(space.dist(p, q), f64::max);
    let ex = set_excess(space, &ids);
    if ex > beta + tol(scale) {
        return Err(Error::Precondition(format!("∂{{P,Q,R,S}} = {ex:.6e} exceeds β = {beta:.6e}")));
    }
    if space.dist(p, q) <= 2.0 * beta {
        return Err(Error::Precondition("d(P,Q) must exceed 2β".into()));
    }
    let mut sorted = ids;
    sorted.sort_unstable();
    let sub = PointSet::new(sorted.to_vec(), space.len())?;
    let wit = menger_map(space, &sub, p, q)?;
    if wit.linf_distortion <= 2.0 * beta + tol(scale) {
        return Ok(FourPointOutcome::Isometry(wit));
    }
    let circ = circularity(space, ids)?;
    if circ.eta_min > 2.0 * beta + tol(scale) {
        return Err(Error::Postcondition(format!(
            "four-point dichotomy failed: distortion {:.6e}, η {:.6e}, β {beta:.6e}",
            wit.linf_distortion, circ.eta_min
        )));
    }
    Ok(FourPointOutcome::Circular(circ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum Attraction {
    Attracted { index: usize, distance: f64 },
    ExcessViolated { excess: f64 },
}

/// For `4β`-circular `P₁..P₄` with `∂ ≤ β` and pairwise distances `> 15β`,
/// reports whether `Q` is within `15β` of some `P_i` or breaks the excess bound.
pub fn attraction_check(space: &MetricSpace, ps: [usize; 4], q: usize, beta: f64) -> Result<Attraction> {
    distinct4(ps, space.len())?;
    if q >= space.len() {
        return Err(Error::Domain(format!("id {q} out of range")));
    }
    let scale = ps.iter().map(|&a| space.dist(ps[0], a)).fold(0.0, f64::max);
    let circ = circularity(space, ps)?;
    if circ.eta_min > 4.0 * beta + tol(scale) {
        return Err(Error::Precondition(format!("points are only {:.3e}-circular, need 4β", circ.eta_min)));
    }
    if set_excess(space, &ps) > beta + tol(scale) {
        return Err(Error::Precondition("∂{P₁..P₄} exceeds β".into()));
    }
    for a in 0..4 {
        for b in a + 1..4 {
            if space.dist(ps[a], ps[b]) <= 15.0 * beta {
                return Err(Error::Precondition("anchor points must be more than 15β apart".into()));
            }
        }
    }
    let (index, distance) =
        (0..4).map(|i| (i, space.dist(q, ps[i]))).fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    if distance <= 15.0 * beta + tol(scale) {
        return Ok(Attraction::Attracted { index, distance });
    }
    let five = [ps[0], ps[1], ps[2], ps[3], q];
    let excess = set_excess(space, &five);
    if excess > beta {
        return Ok(Attraction::ExcessViolated { excess });
    }
    Err(Error::Postcondition(format!("attraction failed: nearest anchor at {distance:.6e}, excess {excess:.6e}")))
}

/// With `∂ ≤ δ` and the cyclic relations `[x₁x₂x₃], [x₂x₃x₄], [x₃x₄x₁], [x₄x₁x₂]`,
/// the points are `2δ`-circular.
pub fn circular_criterion(space: &MetricSpace, xs: [usize; 4], delta: f64) -> Result<bool> {
    distinct4(xs, space.len())?;
    let scale = xs.iter().map(|&a| space.dist(xs[0], a)).fold(0.0, f64::max);
    if set_excess(space, &xs) > delta + tol(scale) {
        return Err(Error::Precondition("∂{x₁..x₄} exceeds δ".into()));
    }
    for i in 0..4 {
        if !between(space, xs[i], xs[(i + 1) % 4], xs[(i + 2) % 4]) {
            return Err(Error::Precondition(format!(
                "betweenness [x{}x{}x{}] fails",
                i + 1,
                (i + 1) % 4 + 1,
                (i + 2) % 4 + 1
            )));
        }
    }
    let eta = circularity(space, xs)?.eta_min;
    if eta > 2.0 * delta + tol(scale) {
        return Err(Error::Postcondition(format!("η = {eta:.6e} exceeds 2δ = {:.6e}", 2.0 * delta)));
    }
    Ok(true)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QuantifiedMenger {
    /// `∂X`, computed exactly.
    pub beta: f64,
    pub witness: Option<EmbeddingWitness>,
    /// `diam X ≤ 40β`, where the zero map already works.
    pub trivial: bool,
    pub holds: bool,
}

/// Sign map anchored at a diameter pair; when `X` has five points pairwise
/// farther than `30β` apart it must be a `40β`-isometry.
pub fn quantified_menger(space: &MetricSpace) -> Result<QuantifiedMenger> {
    let all = space.all();
    let ids = all.ids();
    let beta = set_excess(space, ids);
    let mut best = (0usize, 0usize, f64::NEG_INFINITY);
    for a in 0..ids.len() {
        for b in a + 1..ids.len() {
            let d = space.dist(ids[a], ids[b]);
            if d > best.2 {
                best = (ids[a], ids[b], d);
            }
        }
    }
    if best.2 <= 40.0 * beta {
        return Ok(QuantifiedMenger { beta, witness: None, trivial: true, holds: true });
    }
    let wit = menger_map(space, &all, best.0, best.1)?;
    let holds = wit.linf_distortion <= 40.0 * beta + tol(best.2);
    Ok(QuantifiedMenger { beta, witness: Some(wit), trivial: false, holds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::Ambient;

    fn pts(p: &[[f64; 2]]) -> MetricSpace {
        let v: Vec<Vec<f64>> = p.iter().map(|x| x.to_vec()).collect();
        MetricSpace::from_coords(&v, Ambient::Euclidean { dim: 2 }, None, 1.0).unwrap()
    }

    fn reals(xs: &[f64]) -> MetricSpace {
        let v: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        MetricSpace::from_coords(&v, Ambient::Euclidean { dim: 1 }, None, 1.0).unwrap()
    }

    #[test]
    fn anchors_on_a_line() {
        let sp = reals(&[0.0, 1.0, 2.0, 3.0]);
        let s = select_anchors(&sp, &sp.all(), DEFAULT_ANCHOR_C).unwrap();
        assert_eq!((s.p, s.q), (0, 3));
        assert!(!s.fallback);
        let two = reals(&[0.0, 5.0]);
        let s = select_anchors(&two, &two.all(), DEFAULT_ANCHOR_C).unwrap();
        assert_eq!((s.p, s.q), (0, 1));
        assert!(select_anchors(&reals(&[1.0]), &PointSet::range(1), 16.0).is_err());
    }

    #[test]
    fn map_on_a_line_is_isometric() {
        let sp = reals(&[0.0, 1.0, 2.0, 3.0]);
        let w = menger_map(&sp, &sp.all(), 0, 3).unwrap();
        assert_eq!(w.f, vec![0.0, 1.0, 2.0, 3.0]);
        assert_eq!((w.l1_distortion, w.linf_distortion), (0.0, 0.0));
        // points on the far side of P get negative values
        let sp = reals(&[0.0, -1.0, 2.0]);
        let w = menger_map(&sp, &sp.all(), 0, 2).unwrap();
        assert_eq!(w.f, vec![0.0, -1.0, 2.0]);
        assert!(menger_map(&sp, &sp.all(), 1, 1).is_err());
    }

    #[test]
    fn square_diagonal_map() {
        let sp = pts(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]);
        let w = menger_map(&sp, &sp.all(), 0, 2).unwrap();
        // f = (0, 1, √2, 1): the pair (1,3) is mapped to distance 0
        assert!((w.linf_distortion - 2f64.sqrt()).abs() < 1e-12);
        assert!(w.l1_distortion > 0.0);
    }

    #[test]
    fn circularity_examples() {
        let sq = pts(&[[0.0, 0.0], [2.0, 0.0], [2.0, 2.0], [0.0, 2.0]]);
        assert!(circularity(&sq, [0, 1, 2, 3]).unwrap().eta_min < 1e-15);
        // concyclic, so antipodal pairs match
        let rect = pts(&[[0.0, 0.0], [3.0, 0.0], [3.0, 1.0], [0.0, 1.0]]);
        assert!(circularity(&rect, [0, 1, 2, 3]).unwrap().eta_min < 1e-15);
        let quad = pts(&[[0.0, 0.0], [3.0, 0.0], [3.0, 1.0], [0.0, 2.0]]);
        assert!((circularity(&quad, [0, 1, 2, 3]).unwrap().eta_min - 1.0).abs() < 1e-12);
        assert!(circularity(&rect, [0, 1, 2, 2]).is_err());
    }

    #[test]
    fn four_point_examples() {
        let sp = reals(&[0.0, 10.0, 3.0, 7.0]);
        match four_point_embed(&sp, [0, 1, 2, 3], 0.0).unwrap() {
            FourPointOutcome::Isometry(w) => assert_eq!(w.linf_distortion, 0.0),
            o => panic!("{o:?}"),
        }
        let sq = pts(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]);
        assert!(four_point_embed(&sq, [0, 2, 1, 3], 2.0 - 2f64.sqrt()).is_ok());
        assert!(matches!(four_point_embed(&sq, [0, 2, 1, 3], 0.1), Err(Error::Precondition(_))));
    }

    #[test]
    fn criterion_examples() {
        let sq = pts(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]);
        let delta = set_excess(&sq, &[0, 1, 2, 3]);
        assert!(circular_criterion(&sq, [0, 1, 2, 3], delta).unwrap());
        let line = reals(&[0.0, 1.0, 2.0, 3.0]);
        assert!(matches!(circular_criterion(&line, [0, 1, 2, 3], 0.0), Err(Error::Precondition(_))));
    }

    #[test]
    fn attraction_examples() {
        // four points on a circle of length 4 with its inner metric, plus an arc midpoint
        let pos = [0.0, 1.0, 2.0, 3.0, 0.5];
        let rows: Vec<Vec<f64>> = pos
            .iter()
            .map(|&a: &f64| {
                pos.iter()
                    .map(|&b: &f64| {
                        let d = (a - b).abs();
                        d.min(4.0 - d)
                    })
                    .collect()
            })
            .collect();
        let circle = MetricSpace::from_matrix(&rows, None, 1.0).unwrap();
        let ps = [0, 1, 2, 3];
        assert_eq!(attraction_check(&circle, ps, 0, 0.01).unwrap(), Attraction::Attracted { index: 0, distance: 0.0 });
        assert!(matches!(attraction_check(&circle, ps, 4, 0.01).unwrap(), Attraction::ExcessViolated { .. }));
        let line = reals(&[0.0, 1.0, 2.0, 3.0, 0.5]);
        assert!(matches!(attraction_check(&line, [0, 1, 2, 3], 4, 0.001), Err(Error::Precondition(_))));
    }
}
