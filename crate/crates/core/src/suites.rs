//! Seeded invariant suites and calibrate-then-holdout constant checks.
//!
//! Every case draws from its own ChaCha8 stream, cases run in parallel and
//! outcomes are folded in case order, so reports do not depend on the thread
//! count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::carleson::{carleson_report, Coefficient};
use crate::coeffs::{self, IotaOptions, KappaOptions, PlaneSource};
use crate::covering::{self, short_network, spiral_cover};
use crate::dyadic::{build_dyadic, build_dyadic_seeded};
use crate::error::{Error, Result};
use crate::generate::{generate, GeneratorKind, GeneratorSpec};
use crate::heisenberg::{
    self, dist_to_hplane, embed_h1_to_hn, heis_mul, heis_pythagoras_required, heis_two_plane_required, horiz_project,
    koranyi_dist, HeisPoint, HorizontalPlane,
};
use crate::linalg::{norm, sub};
use crate::menger::{self, circular_criterion, circularity, four_point_embed, quantified_menger};
use crate::planes::{self, angle_euclid, two_plane_pythagoras_check, AffinePlane};
use crate::space::{Ambient, MetricSpace, PointSet};

pub const SUITES: [&str; 6] = ["metric", "dyadic", "menger", "heisenberg", "planes", "covering"];
pub const TOL: f64 = 1e-9;
/// Seed offset separating holdout corpora from calibration corpora.
pub const HOLDOUT_OFFSET: u64 = 1 << 32;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub cases: usize,
    pub skipped: usize,
    pub violations: usize,
    /// Largest measured residual or ratio among the cases.
    pub worst: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_failure: Option<String>,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn violations(&self) -> usize {
        self.checks.iter().map(|c| c.violations).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteOptions {
    pub seed: u64,
    /// Multiplier on the default case counts.
    pub effort: f64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions { seed: 0, effort: 1.0 }
    }
}

impl SuiteOptions {
    fn count(&self, base: usize) -> usize {
        ((base as f64 * self.effort).ceil() as usize).max(1)
    }
}

/// Outcome of one case.
#[derive(Clone, Debug)]
pub enum Outcome {
    Pass(f64),
    Fail(f64, String),
    Skip,
}

/// ChaCha8 stream `stream` of the generator seeded with `seed`.
pub fn case_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Runs `count` cases in parallel and folds them in case order.
pub fn run_cases<F>(name: &str, seed: u64, count: usize, f: F) -> Check
where
    F: Fn(&mut ChaCha8Rng, usize) -> Outcome + Sync,
{
    let outcomes: Vec<Outcome> = (0..count).into_par_iter().map(|i| f(&mut case_rng(seed, i as u64), i)).collect();
    fold(name, outcomes)
}

/// Like [`run_cases`], but draws further streams until `count` cases are
/// admissible (not skipped), giving up after `20·count` streams.
pub fn run_admissible<F>(name: &str, seed: u64, count: usize, f: F) -> Check
where
    F: Fn(&mut ChaCha8Rng, usize) -> Outcome + Sync,
{
    let mut kept = Vec::new();
    let (mut next, mut admitted) = (0usize, 0usize);
    while admitted < count && next < 20 * count.max(1) {
        let batch = (count - admitted).max(64);
        let outcomes: Vec<Outcome> =
            (next..next + batch).into_par_iter().map(|i| f(&mut case_rng(seed, i as u64), i)).collect();
        next += batch;
        for o in outcomes {
            if admitted == count {
                break;
            }
            if !matches!(o, Outcome::Skip) {
                admitted += 1;
            }
            kept.push(o);
        }
    }
    fold(name, kept)
}

pub fn fold(name: &str, outcomes: Vec<Outcome>) -> Check {
    let mut c = Check { name: name.into(), cases: 0, skipped: 0, violations: 0, worst: 0.0, first_failure: None };
    for o in outcomes {
        match o {
            Outcome::Pass(v) => {
                c.cases += 1;
                if v.is_finite() {
                    c.worst = c.worst.max(v);
                }
            }
            Outcome::Fail(v, m) => {
                c.cases += 1;
                c.violations += 1;
                if v.is_finite() {
                    c.worst = c.worst.max(v);
                }
                c.first_failure.get_or_insert(m);
            }
            Outcome::Skip => c.skipped += 1,
        }
    }
    c
}

fn le(v: f64, bound: f64, what: impl FnOnce() -> String) -> Outcome {
    if v <= bound {
        Outcome::Pass(v)
    } else {
        Outcome::Fail(v, what())
    }
}

pub fn run_suite(name: &str, opts: &SuiteOptions) -> Result<SuiteReport> {
    let checks = match name {
        "metric" => metric_suite(opts),
        "dyadic" => dyadic_suite(opts),
        "menger" => menger_suite(opts),
        "heisenberg" => heisenberg_suite(opts),
        "planes" => planes_suite(opts),
        "covering" => covering_suite(opts),
        other => return Err(Error::Spec(format!("unknown suite `{other}`; expected one of {}", SUITES.join(", ")))),
    };
    Ok(SuiteReport { suite: name.into(), seed: opts.seed, checks })
}

// ---------------------------------------------------------------- corpora

fn uniform(rng: &mut ChaCha8Rng, dim: usize, half: f64) -> Vec<f64> {
    (0..dim).map(|_| rng.gen_range(-half..half)).collect()
}

pub fn euclid_space(points: &[Vec<f64>]) -> MetricSpace {
    let d = points[0].len();
    MetricSpace::from_coords(points, Ambient::Euclidean { dim: d }, None, 1.0).expect("valid generated points")
}

/// Generated datasets plus seeded clouds, at most 64 points each.
pub fn suite_spaces(seed: u64) -> Vec<MetricSpace> {
    let kinds = [
        (GeneratorKind::Line, 64),
        (GeneratorKind::Circle, 64),
        (GeneratorKind::ParallelLines { eps: 0.125, r: 1.0 }, 64),
        (GeneratorKind::Cantor4 { depth: 3 }, 0),
        (GeneratorKind::PerturbedLine { noise: 0.02 }, 64),
        (GeneratorKind::ZigzagLift { p: 2.0, depth: 3 }, 57),
    ];
    let mut out: Vec<MetricSpace> =
        kinds.into_iter().map(|(k, n)| generate(&GeneratorSpec::new(k, n, seed)).expect("valid generator")).collect();
    let mut rng = case_rng(seed, 1_000);
    let disc: Vec<Vec<f64>> = (0..48).map(|_| uniform(&mut rng, 2, 1.0)).collect();
    out.push(euclid_space(&disc).with_label("uniform-square"));
    let tube: Vec<Vec<f64>> = (0..48)
        .map(|i| {
            let mut p = uniform(&mut rng, 3, 0.01);
            p[0] += i as f64 / 47.0;
            p
        })
        .collect();
    out.push(euclid_space(&tube).with_label("tube-3d"));
    out
}

/// Suite spaces that are one-dimensional in nature.
pub fn one_dimensional_spaces(seed: u64) -> Vec<MetricSpace> {
    suite_spaces(seed)
        .into_iter()
        .filter(|s| !s.label().starts_with("cantor4") && !s.label().starts_with("uniform"))
        .collect()
}

/// Seeded cloud for dyadic checks: line, circle or square samples.
pub fn dyadic_cloud(seed: u64) -> MetricSpace {
    let mut rng = case_rng(seed, 7);
    let n = rng.gen_range(24..=96);
    let shape = seed % 3;
    let pts: Vec<Vec<f64>> = (0..n)
        .map(|_| match shape {
            0 => vec![rng.gen_range(0.0..1.0), 0.0],
            1 => {
                let a: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                vec![a.cos(), a.sin()]
            }
            _ => uniform(&mut rng, 2, 0.5),
        })
        .collect();
    euclid_space(&pts).with_label(format!("cloud-{seed}"))
}

fn random_heis(rng: &mut ChaCha8Rng, n: usize, half: f64) -> HeisPoint {
    HeisPoint { x: uniform(rng, 2 * n, half), t: rng.gen_range(-half * half..half * half) }
}

fn random_hplane(rng: &mut ChaCha8Rng, n: usize, k: usize) -> HorizontalPlane {
    loop {
        let dirs: Vec<Vec<f64>> = (0..k).map(|_| uniform(rng, 2 * n, 1.0)).collect();
        if let Ok(p) = HorizontalPlane::from_directions(random_heis(rng, n, 1.0), &dirs) {
            return p;
        }
    }
}

fn random_plane(rng: &mut ChaCha8Rng, dim: usize, k: usize) -> AffinePlane {
    loop {
        let dirs: Vec<Vec<f64>> = (0..k).map(|_| uniform(rng, dim, 1.0)).collect();
        if let Ok(p) = AffinePlane::from_directions(uniform(rng, dim, 1.0), &dirs) {
            if p.k() == k {
                return p;
            }
        }
    }
}

/// Same base, directions moved by about `theta`.
fn tilted_plane(rng: &mut ChaCha8Rng, v: &AffinePlane, theta: f64) -> AffinePlane {
    loop {
        let dirs: Vec<Vec<f64>> =
            v.frame().iter().map(|e| e.iter().map(|x| x + theta * rng.gen_range(-1.0..1.0)).collect()).collect();
        if let Ok(p) = AffinePlane::from_directions(v.base().to_vec(), &dirs) {
            if p.k() == v.k() {
                return p;
            }
        }
    }
}

// ---------------------------------------------------------------- metric

fn metric_suite(opts: &SuiteOptions) -> Vec<Check> {
    let spaces = suite_spaces(opts.seed);
    let clouds = opts.count(20);
    let axioms = {
        let mut outcomes: Vec<Outcome> = spaces
            .iter()
            .map(|s| match s.check_metric() {
                Ok(()) => Outcome::Pass(0.0),
                Err(e) => Outcome::Fail(1.0, format!("{}: {e}", s.label())),
            })
            .collect();
        outcomes.extend(
            (0..clouds)
                .into_par_iter()
                .map(|i| {
                    let mut rng = case_rng(opts.seed, i as u64);
                    let pts: Vec<Vec<f64>> = (0..40).map(|_| uniform(&mut rng, 3, 1.0)).collect();
                    let sp = euclid_space(&pts);
                    let rows: Vec<Vec<f64>> =
                        (0..sp.len()).map(|a| (0..sp.len()).map(|b| sp.dist(a, b)).collect()).collect();
                    let abs = MetricSpace::from_matrix(&rows, None, 1.0);
                    match (sp.check_metric(), abs.and_then(|a| a.check_metric())) {
                        (Ok(()), Ok(())) => Outcome::Pass(0.0),
                        (Err(e), _) | (_, Err(e)) => Outcome::Fail(1.0, e.to_string()),
                    }
                })
                .collect::<Vec<_>>(),
        );
        fold("metric axioms", outcomes)
    };
    let euclid = fold(
        "euclidean distance matches coordinates",
        spaces
            .iter()
            .filter(|s| matches!(s.ambient(), Ambient::Euclidean { .. }))
            .map(|s| {
                let mut worst: f64 = 0.0;
                for a in 0..s.len() {
                    for b in 0..s.len() {
                        worst = worst.max((s.dist(a, b) - norm(&sub(s.point(a), s.point(b)))).abs());
                    }
                }
                le(worst, 1e-12, || s.label().to_string())
            })
            .collect(),
    );
    let scale = fold(
        "scale covariance of κ and β",
        spaces
            .par_iter()
            .filter(|s| matches!(s.ambient(), Ambient::Euclidean { .. }))
            .map(|s| {
                let lam = 3.7;
                let big = s.scaled(lam).expect("positive factor");
                let k1 = coeffs::kappa(s, &s.all(), &KappaOptions::default()).map(|v| v.raw);
                let k2 = coeffs::kappa(&big, &big.all(), &KappaOptions::default()).map(|v| v.raw);
                let src = PlaneSource::EuclideanFamily { k: 1 };
                let b1 = coeffs::beta(s, &s.all(), 2.0, &src).map(|v| v.raw);
                let b2 = coeffs::beta(&big, &big.all(), 2.0, &src).map(|v| v.raw);
                match (k1, k2, b1, b2) {
                    (Ok(k1), Ok(k2), Ok(b1), Ok(b2)) => {
                        let r = (k1 - k2).abs().max((b1 - b2).abs());
                        le(r, TOL, || s.label().to_string())
                    }
                    _ => Outcome::Skip,
                }
            })
            .collect(),
    );
    let determinism = fold(
        "generators are pure",
        spaces
            .iter()
            .take(6)
            .enumerate()
            .map(|(i, s)| {
                let again = &suite_spaces(opts.seed)[i];
                let (mut a, mut b) = (Vec::new(), Vec::new());
                crate::io::write_csv(s, &mut a).expect("in-memory write");
                crate::io::write_csv(again, &mut b).expect("in-memory write");
                if a == b {
                    Outcome::Pass(0.0)
                } else {
                    Outcome::Fail(1.0, s.label().to_string())
                }
            })
            .collect(),
    );
    vec![axioms, euclid, scale, determinism]
}

// ---------------------------------------------------------------- dyadic

fn dyadic_suite(opts: &SuiteOptions) -> Vec<Check> {
    let clouds = opts.count(50);
    let props = run_cases("dyadic properties (1)-(5)", opts.seed, clouds, |_, i| {
        let sp = dyadic_cloud(opts.seed.wrapping_mul(1_000).wrapping_add(i as u64));
        let sys = build_dyadic(&sp);
        match sys.verify(&sp) {
            Ok(c) => Outcome::Pass(1.0 / c.c0),
            Err(e) => Outcome::Fail(f64::NAN, format!("{}: {e}", sp.label())),
        }
    });
    let cover = run_cases("ball-to-cube enlargement K (recorded)", opts.seed, opts.count(10), |_, i| {
        let sp = dyadic_cloud(opts.seed.wrapping_mul(1_000).wrapping_add(i as u64));
        Outcome::Pass(build_dyadic(&sp).ball_cover(&sp).k_max)
    });
    let card = run_cases("descendant count constant (recorded)", opts.seed, opts.count(10), |_, i| {
        let sp = dyadic_cloud(opts.seed.wrapping_mul(1_000).wrapping_add(i as u64));
        Outcome::Pass(build_dyadic(&sp).card_constant(1.0))
    });
    let det = run_cases("identical systems for identical spaces", opts.seed, opts.count(10), |_, i| {
        let sp = dyadic_cloud(opts.seed.wrapping_mul(1_000).wrapping_add(i as u64));
        let (a, b) = (build_dyadic(&sp).to_json(), build_dyadic(&sp).to_json());
        match (a, b) {
            (Ok(a), Ok(b)) if a == b => Outcome::Pass(0.0),
            _ => Outcome::Fail(1.0, sp.label().to_string()),
        }
    });
    let seeded = run_cases("shuffled-order systems verify", opts.seed, opts.count(10), |_, i| {
        let sp = dyadic_cloud(opts.seed.wrapping_mul(1_000).wrapping_add(i as u64));
        match build_dyadic_seeded(&sp, i as u64 + 1).verify(&sp) {
            Ok(c) => Outcome::Pass(1.0 / c.c0),
            Err(e) => Outcome::Fail(f64::NAN, e.to_string()),
        }
    });
    let spaces = suite_spaces(opts.seed);
    let stable = fold(
        "geometric-lemma constant across net orders (recorded ratio)",
        spaces[..4]
            .par_iter()
            .map(|sp| {
                let coeff = Coefficient::Beta { q: 2.0, k: 1 };
                let a = carleson_report(sp, &build_dyadic(sp), &coeff, 2.0, 2.0, false);
                let b =
                    carleson_report(sp, &build_dyadic_seeded(sp, opts.seed.wrapping_add(1)), &coeff, 2.0, 2.0, false);
                match (a, b) {
                    (Ok(a), Ok(b)) if a.constant == 0.0 && b.constant == 0.0 => Outcome::Pass(1.0),
                    (Ok(a), Ok(b)) => Outcome::Pass((a.constant / b.constant).max(b.constant / a.constant)),
                    (Err(e), _) | (_, Err(e)) => Outcome::Fail(f64::NAN, e.to_string()),
                }
            })
            .collect(),
    );
    vec![props, cover, card, det, seeded, stable]
}

// ---------------------------------------------------------------- menger

/// Four points of a random shape: uniform, nearly collinear, or a noisy
/// rectangle.
pub fn random_quadruple(rng: &mut ChaCha8Rng) -> MetricSpace {
    let dim = rng.gen_range(1..=3);
    let shape = rng.gen_range(0..3);
    let noise = 10f64.powf(rng.gen_range(-6.0..-1.0));
    let pts: Vec<Vec<f64>> = (0..4)
        .map(|i| {
            let mut p = uniform(rng, dim, noise);
            match shape {
                0 => p.iter_mut().for_each(|v| *v = rng.gen_range(-1.0..1.0)),
                1 => p[0] += rng.gen_range(-1.0..1.0),
                _ => {
                    let corner = [(0.0, 0.0), (1.0, 0.0), (1.0, 0.6), (0.0, 0.6)][i];
                    p[0] += corner.0;
                    if dim > 1 {
                        p[1] += corner.1;
                    }
                }
            }
            p
        })
        .collect();
    let d = pts[0].len();
    MetricSpace::from_coords(&pts, Ambient::Euclidean { dim: d }, None, 1.0)
        .unwrap_or_else(|_| euclid_space(&[vec![0.0], vec![1.0], vec![2.0], vec![3.5]]))
}

pub fn four_point_case(rng: &mut ChaCha8Rng) -> Outcome {
    let sp = random_quadruple(rng);
    let ids = [0, 1, 2, 3];
    let beta = coeffs::set_excess(&sp, &ids);
    match four_point_embed(&sp, ids, beta) {
        Ok(menger::FourPointOutcome::Isometry(w)) => {
            Outcome::Pass(if beta > 0.0 { w.linf_distortion / beta } else { 0.0 })
        }
        Ok(menger::FourPointOutcome::Circular(c)) => Outcome::Pass(if beta > 0.0 { c.eta_min / beta } else { 0.0 }),
        Err(Error::Precondition(_)) => Outcome::Skip,
        Err(e) => Outcome::Fail(f64::NAN, e.to_string()),
    }
}

/// A seeded space with small excess: a noisy or bent line in ℝ² or ℝ³.
pub fn near_line_space(rng: &mut ChaCha8Rng) -> MetricSpace {
    let n = rng.gen_range(8..=40);
    let dim = rng.gen_range(2..=3);
    let noise = 10f64.powf(rng.gen_range(-5.0..-2.0));
    let bend = if rng.gen_bool(0.5) { rng.gen_range(0.0..0.05) } else { 0.0 };
    let mut xs: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let pts: Vec<Vec<f64>> = xs
        .iter()
        .map(|&x| {
            let mut p = uniform(rng, dim, noise);
            p[0] += x;
            p[1] += bend * x * (1.0 - x);
            p
        })
        .collect();
    euclid_space(&pts)
}

/// Five points pairwise farther apart than `gap`, by greedy farthest-point
/// selection from the first point.
fn has_separated_five(sp: &MetricSpace, gap: f64) -> bool {
    let mut chosen = vec![0usize];
    while chosen.len() < 5 {
        let (best, d) = (0..sp.len())
            .map(|y| (y, chosen.iter().map(|&c| sp.dist(c, y)).fold(f64::INFINITY, f64::min)))
            .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
        if d <= gap {
            return false;
        }
        chosen.push(best);
    }
    true
}

pub fn quantified_menger_case(rng: &mut ChaCha8Rng) -> Outcome {
    let sp = near_line_space(rng);
    let beta = coeffs::set_excess(&sp, sp.all().ids());
    if !has_separated_five(&sp, 30.0 * beta) {
        return Outcome::Skip;
    }
    match quantified_menger(&sp) {
        Ok(q) => {
            let r = q.witness.as_ref().map_or(0.0, |w| if beta > 0.0 { w.linf_distortion / beta } else { 0.0 });
            if q.holds {
                Outcome::Pass(r)
            } else {
                Outcome::Fail(r, format!("distortion {r:.3}β on {} points", sp.len()))
            }
        }
        Err(e) => Outcome::Fail(f64::NAN, e.to_string()),
    }
}

const PERMS: [[usize; 4]; 24] = {
    let mut out = [[0; 4]; 24];
    let mut k = 0;
    let mut a = 0;
    while a < 4 {
        let mut b = 0;
        while b < 4 {
            let mut c = 0;
            while c < 4 {
                if a != b && b != c && a != c {
                    out[k] = [a, b, c, 6 - a - b - c];
                    k += 1;
                }
                c += 1;
            }
            b += 1;
        }
        a += 1;
    }
    out
};

fn menger_suite(opts: &SuiteOptions) -> Vec<Check> {
    let four = run_admissible("four-point dichotomy", opts.seed, opts.count(10_000), |rng, _| four_point_case(rng));
    let quant = run_admissible("quantified Menger 40β-isometry", opts.seed, opts.count(200), |rng, _| {
        quantified_menger_case(rng)
    });
    let relabel = run_cases("relabeling invariance of ∂ and circularity", opts.seed, opts.count(1_000), |rng, _| {
        let sp = random_quadruple(rng);
        let e0 = coeffs::set_excess(&sp, &[0, 1, 2, 3]);
        let c0 = circularity(&sp, [0, 1, 2, 3]).map(|c| c.eta_min).unwrap_or(f64::NAN);
        for p in PERMS {
            let e = coeffs::set_excess(&sp, &p);
            let c = circularity(&sp, p).map(|c| c.eta_min).unwrap_or(f64::NAN);
            if e != e0 || c != c0 {
                return Outcome::Fail(1.0, format!("permutation {p:?}"));
            }
        }
        Outcome::Pass(0.0)
    });
    let criterion = run_cases("circular criterion", opts.seed, opts.count(1_000), |rng, _| {
        let w = rng.gen_range(0.5..2.0);
        let noise = 10f64.powf(rng.gen_range(-6.0..-2.0));
        let corners = [[0.0, 0.0], [1.0, 0.0], [1.0, w], [0.0, w]];
        let pts: Vec<Vec<f64>> = corners
            .iter()
            .map(|c| vec![c[0] + rng.gen_range(-noise..noise), c[1] + rng.gen_range(-noise..noise)])
            .collect();
        let sp = euclid_space(&pts);
        let delta = coeffs::set_excess(&sp, &[0, 1, 2, 3]);
        match circular_criterion(&sp, [0, 1, 2, 3], delta) {
            Ok(_) => Outcome::Pass(
                circularity(&sp, [0, 1, 2, 3]).map(|c| c.eta_min / delta.max(f64::MIN_POSITIVE)).unwrap_or(0.0),
            ),
            Err(Error::Precondition(_)) => Outcome::Skip,
            Err(e) => Outcome::Fail(f64::NAN, e.to_string()),
        }
    });
    vec![four, quant, relabel, criterion]
}

// ---------------------------------------------------------------- heisenberg

fn heis_scale(ps: &[&HeisPoint]) -> f64 {
    ps.iter().map(|p| norm(&p.x) + p.t.abs().sqrt()).fold(1.0, f64::max)
}

fn heisenberg_suite(opts: &SuiteOptions) -> Vec<Check> {
    let s = opts.seed;
    let dim = |i: usize| 1 + i % 2;
    let triangle = run_cases("Korányi triangle inequality", s, opts.count(100_000), |rng, i| {
        let n = dim(i);
        let (a, b, c) = (random_heis(rng, n, 2.0), random_heis(rng, n, 2.0), random_heis(rng, n, 2.0));
        let (ab, bc, ac) =
            (koranyi_dist(&a, &b).unwrap(), koranyi_dist(&b, &c).unwrap(), koranyi_dist(&a, &c).unwrap());
        le(ac - ab - bc, 1e-12 * heis_scale(&[&a, &b, &c]), || format!("{a:?} {b:?} {c:?}"))
    });
    let invariance = run_cases("left invariance", s, opts.count(10_000), |rng, i| {
        let n = dim(i);
        let (p, q, w) = (random_heis(rng, n, 2.0), random_heis(rng, n, 2.0), random_heis(rng, n, 2.0));
        let d0 = koranyi_dist(&p, &q).unwrap();
        let d1 = koranyi_dist(&heis_mul(&w, &p).unwrap(), &heis_mul(&w, &q).unwrap()).unwrap();
        le((d1 - d0).abs(), 1e-12 * heis_scale(&[&p, &q, &w]), || format!("{d0} vs {d1}"))
    });
    let shadow = run_cases("distance dominates the horizontal shadow", s, opts.count(10_000), |rng, i| {
        let n = dim(i);
        let (p, q) = (random_heis(rng, n, 2.0), random_heis(rng, n, 2.0));
        le(norm(&sub(&p.x, &q.x)) - koranyi_dist(&p, &q).unwrap(), 1e-12 * heis_scale(&[&p, &q]), String::new)
    });
    let equivariance = run_cases("projection equivariance", s, opts.count(2_000), |rng, i| {
        let n = dim(i);
        let v = {
            let k = rng.gen_range(1..=n);
            random_hplane(rng, n, k)
        };
        let (p, w) = (random_heis(rng, n, 2.0), random_heis(rng, n, 2.0));
        let lhs = heis_mul(&w, &horiz_project(&v, &p).unwrap()).unwrap();
        let rhs = horiz_project(&v.translate(&w).unwrap(), &heis_mul(&w, &p).unwrap()).unwrap();
        let err = norm(&sub(&lhs.x, &rhs.x)).max((lhs.t - rhs.t).abs() / heis_scale(&[&p, &w, v.base()]));
        le(err, 1e-12 * heis_scale(&[&p, &w, v.base()]).powi(2), || format!("error {err:e}"))
    });
    let projected =
        run_cases("projected distance equals Euclidean projected distance", s, opts.count(2_000), |rng, i| {
            let n = dim(i);
            let v = {
                let k = rng.gen_range(1..=n);
                random_hplane(rng, n, k)
            };
            let (p, q) = (random_heis(rng, n, 2.0), random_heis(rng, n, 2.0));
            let d = koranyi_dist(&horiz_project(&v, &p).unwrap(), &horiz_project(&v, &q).unwrap()).unwrap();
            let e = norm(&sub(&v.chart_coords(&p.to_vec()), &v.chart_coords(&q.to_vec())));
            le((d - e).abs(), 1e-12 * heis_scale(&[&p, &q, v.base()]), || format!("{d} vs {e}"))
        });
    let on_plane = run_cases("on-plane isometry", s, opts.count(2_000), |rng, i| {
        let n = dim(i);
        let k = rng.gen_range(1..=n);
        let v = random_hplane(rng, n, k);
        let (s1, s2) = (uniform(rng, k, 2.0), uniform(rng, k, 2.0));
        let d = koranyi_dist(&v.point_at(&s1), &v.point_at(&s2)).unwrap();
        let e = norm(&sub(&s1, &s2));
        le((d - e).abs(), 1e-12 * heis_scale(&[v.base()]) * (1.0 + e), || format!("{d} vs {e}"))
    });
    let lipschitz = run_cases("projection is 1-Lipschitz and idempotent", s, opts.count(2_000), |rng, i| {
        let n = dim(i);
        let v = {
            let k = rng.gen_range(1..=n);
            random_hplane(rng, n, k)
        };
        let (p, q) = (random_heis(rng, n, 2.0), random_heis(rng, n, 2.0));
        let (pp, pq) = (horiz_project(&v, &p).unwrap(), horiz_project(&v, &q).unwrap());
        // fourth powers: the gauge takes a root of the t gap, which magnifies rounding
        let scale = heis_scale(&[&p, &q, v.base()]);
        let gain = koranyi_dist(&pp, &pq).unwrap().powi(4) - koranyi_dist(&p, &q).unwrap().powi(4);
        let again = horiz_project(&v, &pp).unwrap();
        let drift = again.to_vec().iter().zip(pp.to_vec()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        le((gain / scale.powi(4)).max(drift / scale.powi(2)), 1e-12, || format!("gain {gain:e}, drift {drift:e}"))
    });
    let sandwich = run_cases("distance-to-plane sandwich", s, opts.count(1_000), |rng, i| {
        let n = dim(i);
        let v = {
            let k = rng.gen_range(1..=n);
            random_hplane(rng, n, k)
        };
        let p = random_heis(rng, n, 2.0);
        let d = dist_to_hplane(&v, &p).unwrap();
        let slack = (d.lower - d.value).max(d.value - d.upper);
        le(slack, 1e-6, || format!("{d:?}"))
    });
    let embed = run_cases("H¹ → Hⁿ embedding is isometric", s, opts.count(1_000), |rng, _| {
        let (p, q) = (random_heis(rng, 1, 2.0), random_heis(rng, 1, 2.0));
        let n = rng.gen_range(1..=4);
        let d0 = koranyi_dist(&p, &q).unwrap();
        let d1 = koranyi_dist(&embed_h1_to_hn(&p, n).unwrap(), &embed_h1_to_hn(&q, n).unwrap()).unwrap();
        le((d0 - d1).abs(), 1e-12 * (1.0 + d0), || format!("{d0} vs {d1}"))
    });
    let zigzag = zigzag_growth(2.0, 1..=4);
    let cal = heis_calibration(s, opts.count(2_000));
    let mut out =
        vec![triangle, invariance, shadow, equivariance, projected, on_plane, lipschitz, sandwich, embed, zigzag];
    out.extend(heis_holdout(&cal, s, opts.count(2_000)));
    out
}

/// Root sums of `β_∞` squared over lifted zig-zags, one per depth; a trend
/// report only, nothing is asserted.
pub fn zigzag_growth(p: f64, depths: std::ops::RangeInclusive<u32>) -> Check {
    let sums: Vec<std::result::Result<f64, String>> = depths
        .clone()
        .map(|depth| {
            let spec = GeneratorSpec::new(GeneratorKind::ZigzagLift { p, depth }, (2usize << depth) + 1, 0);
            let sp = generate(&spec).map_err(|e| e.to_string())?;
            let sys = build_dyadic(&sp);
            let r = carleson_report(&sp, &sys, &Coefficient::Beta { q: f64::INFINITY, k: 1 }, 2.0, 2.0, false)
                .map_err(|e| e.to_string())?;
            Ok(sys.levels[0].iter().map(|&c| r.per_root[c]).fold(0.0, f64::max))
        })
        .collect();
    let shown: Vec<String> =
        sums.iter().map(|v| v.as_ref().map_or_else(|e| e.clone(), |x| format!("{x:.4}"))).collect();
    fold(
        &format!("zig-zag β_∞ root sums, depths {depths:?} (recorded): {}", shown.join(", ")),
        sums.into_iter().map(|v| v.map_or_else(|e| Outcome::Fail(f64::NAN, e), Outcome::Pass)).collect(),
    )
}

/// Gate constant for the Heisenberg Pythagoras configurations.
pub const HEIS_GATE_C: f64 = 0.25;

/// Plane and two points within `c·d(p₁,p₂)` of it, perturbed off the plane
/// by a small group element.
fn heis_near_plane(rng: &mut ChaCha8Rng) -> (HorizontalPlane, HeisPoint, HeisPoint) {
    let n = rng.gen_range(1..=2);
    let k = rng.gen_range(1..=n);
    let v = random_hplane(rng, n, k);
    let s1 = uniform(rng, k, 1.0);
    let s2 = uniform(rng, k, 1.0);
    let size = 10f64.powf(rng.gen_range(-4.0..-0.5));
    let mut bump = || HeisPoint { x: uniform(rng, 2 * n, size), t: rng.gen_range(-size * size..size * size) };
    let p1 = heis_mul(&v.point_at(&s1), &bump()).unwrap();
    let p2 = heis_mul(&v.point_at(&s2), &bump()).unwrap();
    (v, p1, p2)
}

fn heis_two_planes(rng: &mut ChaCha8Rng) -> (HorizontalPlane, HorizontalPlane, HeisPoint, HeisPoint) {
    let (v, x, y) = heis_near_plane(rng);
    let theta = 10f64.powf(rng.gen_range(-4.0..-1.0));
    let dirs: Vec<Vec<f64>> =
        v.frame().iter().map(|e| e.iter().map(|a| a + theta * rng.gen_range(-1.0..1.0)).collect()).collect();
    let w = HorizontalPlane::from_directions(v.base().clone(), &dirs).unwrap_or_else(|_| v.clone());
    (v, w, x, y)
}

/// Constants fitted on a calibration corpus and doubled.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub heis_pythagoras_n: f64,
    pub heis_two_plane_n0: f64,
    pub euclid_c_p: f64,
    pub small_angle_d: f64,
    pub tilting_d: f64,
    pub network_lambda: f64,
    pub cover_m: f64,
}

fn max_required<F>(seed: u64, count: usize, f: F) -> f64
where
    F: Fn(&mut ChaCha8Rng) -> Option<f64> + Sync,
{
    (0..count)
        .into_par_iter()
        .filter_map(|i| f(&mut case_rng(seed, i as u64)))
        .filter(|v| v.is_finite())
        .reduce(|| 0.0, f64::max)
}

fn heis_required(rng: &mut ChaCha8Rng) -> Option<f64> {
    let (v, p1, p2) = heis_near_plane(rng);
    heis_pythagoras_required(&v, &p1, &p2, HEIS_GATE_C).ok().flatten()
}

fn heis_two_required(rng: &mut ChaCha8Rng) -> Option<f64> {
    let (v, w, x, y) = heis_two_planes(rng);
    heis_two_plane_required(&v, &w, &x, &y, HEIS_GATE_C).ok().flatten()
}

pub fn heis_calibration(seed: u64, count: usize) -> (f64, f64) {
    (2.0 * max_required(seed, count, heis_required), 2.0 * max_required(seed, count, heis_two_required))
}

fn heis_holdout(cal: &(f64, f64), seed: u64, count: usize) -> Vec<Check> {
    let (n1, n0) = *cal;
    let hs = seed.wrapping_add(HOLDOUT_OFFSET);
    let single = run_cases(&format!("Heisenberg Pythagoras holdout (N = {n1:.4})"), hs, count, |rng, _| {
        let (v, p1, p2) = heis_near_plane(rng);
        match heisenberg::heis_pythagoras_check(&v, &p1, &p2, HEIS_GATE_C, n1) {
            Ok(r) => le(r, TOL * (1.0 + koranyi_dist(&p1, &p2).unwrap().powi(2)), || format!("residual {r:e}")),
            Err(_) => Outcome::Skip,
        }
    });
    let two = run_cases(&format!("Heisenberg two-plane holdout (N₀ = {n0:.4})"), hs, count, |rng, _| {
        let (v, w, x, y) = heis_two_planes(rng);
        match heisenberg::heis_two_plane_check(&v, &w, &x, &y, HEIS_GATE_C, n0) {
            Ok(r) => le(r, TOL * (1.0 + koranyi_dist(&x, &y).unwrap().powi(2)), || format!("residual {r:e}")),
            Err(_) => Outcome::Skip,
        }
    });
    vec![single, two]
}

// ---------------------------------------------------------------- planes

fn two_plane_config(rng: &mut ChaCha8Rng) -> (AffinePlane, AffinePlane, Vec<f64>, Vec<f64>) {
    let dim = rng.gen_range(2..=5);
    let k = rng.gen_range(1..dim);
    let v1 = random_plane(rng, dim, k);
    let theta = 10f64.powf(rng.gen_range(-4.0..0.0));
    let v2 = tilted_plane(rng, &v1, theta);
    let off = 10f64.powf(rng.gen_range(-4.0..0.0));
    let on = |rng: &mut ChaCha8Rng| {
        let s = uniform(rng, k, 1.0);
        let mut p = v1.base().to_vec();
        for (si, e) in s.iter().zip(v1.frame()) {
            p.iter_mut().zip(e).for_each(|(a, b)| *a += si * b);
        }
        p.iter_mut().for_each(|a| *a += rng.gen_range(-off..off));
        p
    };
    let (x, y) = (on(rng), on(rng));
    (v1, v2, x, y)
}

pub fn pythagoras_case(rng: &mut ChaCha8Rng) -> Outcome {
    let (v1, v2, x, y) = two_plane_config(rng);
    match two_plane_pythagoras_check(&v1, &v2, &x, &y) {
        Ok(r) => {
            let d2 = norm(&sub(&x, &y)).powi(2);
            le(r, TOL * (1.0 + d2), || format!("residual {r:e}"))
        }
        Err(_) => Outcome::Skip,
    }
}

fn c_p_required(rng: &mut ChaCha8Rng) -> Option<f64> {
    let (v1, v2, x, y) = two_plane_config(rng);
    planes::pythagoras_constant_required(&v1, &v2, &x, &y).ok().flatten()
}

/// Independence gate for the small-angle configurations.
pub const SMALL_ANGLE_C: f64 = 0.1;

fn small_angle_ratio(rng: &mut ChaCha8Rng) -> Option<f64> {
    let dim = rng.gen_range(2..=4);
    let k = rng.gen_range(1..dim);
    let v1 = random_plane(rng, dim, k);
    let theta = 10f64.powf(rng.gen_range(-4.0..-1.0));
    let v2 = tilted_plane(rng, &v1, theta);
    let ys: Vec<Vec<f64>> = (0..=k)
        .map(|_| {
            let s = uniform(rng, k, 1.0);
            let mut p = v1.base().to_vec();
            for (si, e) in s.iter().zip(v1.frame()) {
                p.iter_mut().zip(e).for_each(|(a, b)| *a += si * b);
            }
            p
        })
        .collect();
    let mut e2: f64 = 0.0;
    for (i, a) in ys.iter().enumerate() {
        for b in &ys[i + 1..] {
            let d2 = norm(&sub(a, b)).powi(2);
            let p2 = norm(&sub(&v2.project(a), &v2.project(b))).powi(2);
            if p2 == 0.0 {
                return None;
            }
            e2 = e2.max(d2 / p2 - 1.0);
        }
    }
    let eps = e2.max(0.0).sqrt() * (1.0 + 1e-6) + 1e-12;
    if eps >= 1.0 {
        return None;
    }
    planes::small_angle_bound(&v1, &v2, &ys, SMALL_ANGLE_C, eps).ok()
}

/// Seeded noisy circle or line for tilting statistics.
fn tilt_space(seed: u64) -> MetricSpace {
    let mut rng = case_rng(seed, 11);
    let n = 48;
    let noise = 10f64.powf(rng.gen_range(-4.0..-2.0));
    let circle = seed.is_multiple_of(2);
    let pts: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let u = i as f64 / n as f64;
            let base = if circle {
                let a = std::f64::consts::TAU * u;
                vec![a.cos(), a.sin()]
            } else {
                vec![u, 0.0]
            };
            base.iter().map(|v| v + rng.gen_range(-noise..noise)).collect()
        })
        .collect();
    euclid_space(&pts)
}

/// Finite, non-degenerate tilting ratios for child/parent pairs of one space.
fn tilt_ratios(seed: u64) -> Vec<f64> {
    let sp = tilt_space(seed);
    let sys = build_dyadic(&sp);
    let pairs: Vec<(usize, usize)> = sys
        .cubes
        .iter()
        .filter(|c| c.members.len() >= 6 && c.level <= sys.j_min + 4)
        .filter_map(|c| c.parent.map(|p| (c.id, p)))
        .collect();
    pairs
        .par_iter()
        .filter_map(|&(q1, q0)| planes::euclid_tilting_ratio(&sp, &sys, q1, q0, 1.5, 3.0, 1).ok())
        .filter(|t| !t.degenerate && t.ratio.is_finite())
        .map(|t| t.ratio)
        .collect()
}

fn planes_suite(opts: &SuiteOptions) -> Vec<Check> {
    let s = opts.seed;
    let angle = run_cases("angle triangle inequality", s, opts.count(10_000), |rng, _| {
        let dim = rng.gen_range(2..=5);
        let k = rng.gen_range(1..dim);
        let (a, b, c) = (random_plane(rng, dim, k), random_plane(rng, dim, k), random_plane(rng, dim, k));
        let r = angle_euclid(&a, &c).unwrap() - angle_euclid(&a, &b).unwrap() - angle_euclid(&b, &c).unwrap();
        le(r, TOL, || format!("excess {r:e}"))
    });
    let pyth = run_cases("two-plane Pythagoras", s, opts.count(10_000), |rng, _| pythagoras_case(rng));
    let power = run_cases("β_q ≤ β_2q for a fixed plane", s, opts.count(500), |rng, _| {
        let dim = rng.gen_range(2..=4);
        let pts: Vec<Vec<f64>> = (0..20).map(|_| uniform(rng, dim, 1.0)).collect();
        let sp = euclid_space(&pts);
        let k = rng.gen_range(1..dim);
        let v = random_plane(rng, dim, k);
        let q = rng.gen_range(0.5..4.0);
        let src = PlaneSource::Affine(v);
        let b1 = coeffs::beta(&sp, &sp.all(), q, &src).unwrap().raw;
        let b2 = coeffs::beta(&sp, &sp.all(), 2.0 * q, &src).unwrap().raw;
        le(b1 - b2, TOL, || format!("{b1} > {b2}"))
    });
    let spaces = suite_spaces(s);
    let iota1 = iota_two_beta_check(&spaces, 1.0, 2.0);
    let iota2 = iota_two_beta_check(&spaces, 2.0, 2.0);
    let (kappa, converse) = kappa_iota_check(&one_dimensional_spaces(s), 2.0);
    let ls = run_cases("least-squares fit beats random search", s, opts.count(100), |rng, _| {
        let dim = rng.gen_range(2..=3);
        let pts: Vec<Vec<f64>> = (0..24).map(|_| uniform(rng, dim, 1.0)).collect();
        let sp = euclid_space(&pts);
        let k = rng.gen_range(1..dim);
        let fit = planes::fit_plane(&sp, &sp.all(), k, 2.0).unwrap();
        let oracle = random_search_beta2(&sp, k, rng);
        le(fit.value / oracle, 1.01, || format!("{} vs oracle {oracle}", fit.value))
    });
    let cal = planes_calibration(s, opts.count(2_000));
    let mut out = vec![angle, pyth, power, iota1, iota2, kappa, converse, ls];
    out.extend(planes_holdout(&cal, s, opts.count(2_000)));
    out
}

/// Best `β₂` over planes through random pairs/triples of points with random
/// extra directions.
fn random_search_beta2(sp: &MetricSpace, k: usize, rng: &mut ChaCha8Rng) -> f64 {
    let dim = sp.point(0).len();
    let all = sp.all();
    let mut best = f64::INFINITY;
    for _ in 0..2_000 {
        let base = sp.point(rng.gen_range(0..sp.len())).to_vec();
        let dirs: Vec<Vec<f64>> = (0..k)
            .map(|_| {
                let other = sp.point(rng.gen_range(0..sp.len()));
                let jitter = uniform(rng, dim, 0.3);
                sub(other, &base).iter().zip(&jitter).map(|(a, b)| a + b).collect()
            })
            .collect();
        if let Ok(p) = AffinePlane::from_directions(base, &dirs) {
            if p.k() == k {
                let v = coeffs::beta(sp, &all, 2.0, &PlaneSource::Affine(p)).unwrap().raw;
                best = best.min(v);
            }
        }
    }
    best
}

/// `ι_plane(KQ) ≤ factor·β(KQ)` at the fitted plane, for every cube.
pub fn iota_two_beta_check(spaces: &[MetricSpace], q: f64, k_factor: f64) -> Check {
    let outcomes: Vec<Outcome> = spaces
        .iter()
        .flat_map(|sp| {
            let sys = build_dyadic(sp);
            let heis = matches!(sp.ambient(), Ambient::Heisenberg { .. });
            // the Heisenberg chart loses up to 2^{5/4} against the Korányi distance to the plane
            let bound = if heis { 2.0 * 2f64.powf(1.25) } else { 2.0 };
            (0..sys.len())
                .into_par_iter()
                .map(|c| {
                    let s = match sys.enlarge(sp, c, k_factor) {
                        Ok(s) => s,
                        Err(e) => return Outcome::Fail(f64::NAN, e.to_string()),
                    };
                    if sp.diam_of(s.ids()) == 0.0 {
                        return Outcome::Skip;
                    }
                    iota_vs_beta(sp, &s, q, bound)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    fold(&format!("ι_plane ≤ 2β on cube neighborhoods (q = {q})"), outcomes)
}

/// `κ(KQ) ≤ 3·ι_{1,1}(KQ)` against the upper end of the bracket, for every
/// cube, plus the recorded converse ratio `ι(KQ) / κ(7Q)`.
pub fn kappa_iota_check(spaces: &[MetricSpace], k_factor: f64) -> (Check, Check) {
    let pairs: Vec<(Outcome, Outcome)> = spaces
        .iter()
        .flat_map(|sp| {
            let sys = build_dyadic(sp);
            (0..sys.len())
                .into_par_iter()
                .map(|c| {
                    let (s, wide) = match (sys.enlarge(sp, c, k_factor), sys.enlarge(sp, c, 7.0)) {
                        (Ok(s), Ok(w)) => (s, w),
                        (Err(e), _) | (_, Err(e)) => return (Outcome::Fail(f64::NAN, e.to_string()), Outcome::Skip),
                    };
                    if sp.diam_of(s.ids()) == 0.0 {
                        return (Outcome::Skip, Outcome::Skip);
                    }
                    let k = coeffs::kappa(sp, &s, &KappaOptions::default());
                    let kw = coeffs::kappa(sp, &wide, &KappaOptions::default());
                    let b = coeffs::iota_estimate(sp, &s, 1.0, 1, &IotaOptions::default());
                    match (k, kw, b) {
                        (Ok(k), Ok(kw), Ok(b)) => {
                            let ratio = if kw.raw > 0.0 {
                                Outcome::Pass(b.upper / kw.raw)
                            } else if b.upper > 0.0 {
                                Outcome::Pass(f64::INFINITY)
                            } else {
                                Outcome::Skip
                            };
                            (le(k.raw - 3.0 * b.upper, TOL, || format!("κ {} vs ι ≤ {}", k.raw, b.upper)), ratio)
                        }
                        (Err(e), ..) | (_, Err(e), _) | (.., Err(e)) => {
                            (Outcome::Fail(f64::NAN, e.to_string()), Outcome::Skip)
                        }
                    }
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let (bound, ratio): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
    (fold("κ ≤ 3·ι upper bound on cube neighborhoods", bound), fold("ι(2Q) / κ(7Q) converse ratio (recorded)", ratio))
}

/// One comparison of `ι_plane` against `bound·β` at the same fitted plane.
pub fn iota_vs_beta(sp: &MetricSpace, s: &PointSet, q: f64, bound: f64) -> Outcome {
    let src = match sp.ambient() {
        Ambient::Heisenberg { .. } => PlaneSource::HeisHorizontalFamily { k: 1 },
        _ => PlaneSource::EuclideanFamily { k: 1 },
    };
    let b = match coeffs::beta(sp, s, q, &src) {
        Ok(b) => b,
        Err(e) => return Outcome::Fail(f64::NAN, e.to_string()),
    };
    let plane = match b.witness {
        Some(coeffs::Witness::Plane { plane, .. }) => PlaneSource::Affine(plane),
        Some(coeffs::Witness::Horizontal { plane, .. }) => PlaneSource::Horizontal(plane),
        _ => return Outcome::Skip,
    };
    match coeffs::iota_plane(sp, s, q, &plane) {
        Ok(i) => le(i.raw - bound * b.raw, TOL, || format!("ι {} vs β {} on {} points", i.raw, b.raw, s.len())),
        Err(e) => Outcome::Fail(f64::NAN, e.to_string()),
    }
}

/// `(C_P, D_small, D_tilt)`, doubled.
pub fn planes_calibration(seed: u64, count: usize) -> (f64, f64, f64) {
    let cp = max_required(seed, count, c_p_required);
    let small = max_required(seed, count, small_angle_ratio);
    let tilt = (0..6u64).flat_map(|i| tilt_ratios(seed.wrapping_mul(100).wrapping_add(i))).fold(0.0, f64::max);
    (2.0 * cp, 2.0 * small, 2.0 * tilt)
}

fn planes_holdout(cal: &(f64, f64, f64), seed: u64, count: usize) -> Vec<Check> {
    let (cp, small, tilt) = *cal;
    let hs = seed.wrapping_add(HOLDOUT_OFFSET);
    let c1 = run_cases(&format!("C_P holdout (C_P = {cp:.4})"), hs, count, |rng, _| match c_p_required(rng) {
        Some(v) => le(v, cp, || format!("needs {v}")),
        None => Outcome::Skip,
    });
    let c2 =
        run_cases(&format!("small-angle holdout (D = {small:.4})"), hs, count, |rng, _| match small_angle_ratio(rng) {
            Some(v) => le(v, small, || format!("ratio {v}")),
            None => Outcome::Skip,
        });
    let c3 = fold(
        &format!("tilting holdout (D = {tilt:.4})"),
        (0..6u64)
            .flat_map(|i| tilt_ratios(hs.wrapping_mul(100).wrapping_add(i)))
            .map(|v| le(v, tilt, || format!("ratio {v}")))
            .collect(),
    );
    vec![c1, c2, c3]
}

// ---------------------------------------------------------------- covering

/// Origin plus 100 seeded points of the unit disc.
pub fn disc_cloud(seed: u64) -> MetricSpace {
    let mut rng = case_rng(seed, 13);
    let mut pts = vec![vec![0.0, 0.0]];
    while pts.len() < 101 {
        let p = uniform(&mut rng, 2, 1.0);
        if norm(&p) <= 1.0 {
            pts.push(p);
        }
    }
    euclid_space(&pts)
}

fn network_ratio(seed: u64, d: f64) -> Option<f64> {
    let sp = disc_cloud(seed);
    short_network(&sp, &sp.all(), 0, 1.0, d).ok().map(|n| n.ratio(1.0, d))
}

/// Spread-out clouds for spiral covers: a long line or a large circle.
fn cover_space(seed: u64) -> MetricSpace {
    let mut rng = case_rng(seed, 17);
    let n = rng.gen_range(200..=400);
    let pts: Vec<Vec<f64>> = if seed.is_multiple_of(2) {
        (0..n).map(|i| vec![1000.0 * i as f64 / (n - 1) as f64 + rng.gen_range(-0.1..0.1), 0.0]).collect()
    } else {
        (0..n)
            .map(|i| {
                let a = std::f64::consts::TAU * i as f64 / n as f64;
                vec![100.0 * (1.0 + a.cos()), 100.0 * a.sin()]
            })
            .collect()
    };
    euclid_space(&pts)
}

fn cover_m(seed: u64) -> Option<f64> {
    let sp = cover_space(seed);
    spiral_cover(&sp, 0, 2.0).ok().filter(|c| c.check.covered).map(|c| c.check.m)
}

/// `(λ, M)`, doubled.
pub fn covering_calibration(seed: u64, count: usize) -> (f64, f64) {
    let lam = (0..count as u64)
        .into_par_iter()
        .filter_map(|i| network_ratio(seed.wrapping_add(i), 2.0))
        .reduce(|| 0.0, f64::max);
    let m = (0..(count / 4).max(2) as u64)
        .into_par_iter()
        .filter_map(|i| cover_m(seed.wrapping_add(i)))
        .reduce(|| 0.0, f64::max);
    (2.0 * lam, 2.0 * m)
}

fn covering_suite(opts: &SuiteOptions) -> Vec<Check> {
    let s = opts.seed;
    let count = opts.count(20);
    let networks = run_cases("networks connect and sum their edges", s, count, |_, i| {
        let sp = disc_cloud(s.wrapping_add(i as u64));
        match short_network(&sp, &sp.all(), 0, 1.0, 2.0) {
            Ok(n) => {
                let sum: f64 = n.edges.iter().map(|e| e.length).sum();
                if n.connected && (sum - n.length).abs() <= 1e-12 * (1.0 + sum) {
                    Outcome::Pass(n.length)
                } else {
                    Outcome::Fail(n.length, "disconnected or length mismatch".into())
                }
            }
            Err(e) => Outcome::Fail(f64::NAN, e.to_string()),
        }
    });
    let monotone = run_cases("bound ratio non-increasing in D", s, count, |_, i| {
        let sp = disc_cloud(s.wrapping_add(i as u64));
        let net = short_network(&sp, &sp.all(), 0, 1.0, 1.0).expect("points lie in the unit ball");
        let rs: Vec<f64> = [1.0, 1.5, 2.0, 3.0, 5.0].iter().map(|&d| net.ratio(1.0, d)).collect();
        let worst = rs.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
        le(worst, 0.0, || format!("{rs:?}"))
    });
    let covers = run_cases("spiral covers cover", s, opts.count(4), |_, i| {
        let sp = cover_space(s.wrapping_add(i as u64));
        match spiral_cover(&sp, 0, 2.0) {
            Ok(c) if c.check.covered && c.check.m.is_finite() => Outcome::Pass(c.check.m),
            Ok(c) => Outcome::Fail(c.check.m, "not covered".into()),
            Err(e) => Outcome::Fail(f64::NAN, e.to_string()),
        }
    });
    let regular = run_cases("union network upper regularity (recorded)", s, opts.count(2), |_, i| {
        let sp = cover_space(s.wrapping_add(i as u64));
        let cover = spiral_cover(&sp, 0, 2.0).expect("t > 1");
        let net = match covering::cover_network(&sp, &cover, 1.0) {
            Ok(n) => n,
            Err(e) => return Outcome::Fail(f64::NAN, e.to_string()),
        };
        let centers: Vec<usize> = (0..sp.len()).step_by(10).collect();
        let radii = [1.0, 4.0, 16.0, 64.0, 256.0, 1024.0];
        match covering::upper_regularity_ratio(&sp, &net, &centers, &radii) {
            Ok(r) if r.is_finite() => Outcome::Pass(r),
            Ok(r) => Outcome::Fail(r, "unbounded".into()),
            Err(e) => Outcome::Fail(f64::NAN, e.to_string()),
        }
    });
    let (lam, m) = covering_calibration(s, count);
    let hs = s.wrapping_add(HOLDOUT_OFFSET);
    let lam_check = fold(
        &format!("network λ holdout (λ = {lam:.4})"),
        (0..count as u64)
            .into_par_iter()
            .map(|i| match network_ratio(hs.wrapping_add(i), 2.0) {
                Some(v) => le(v, lam, || format!("ratio {v}")),
                None => Outcome::Skip,
            })
            .collect(),
    );
    let m_check = fold(
        &format!("spiral cover M holdout (M = {m:.4})"),
        (0..(count / 4).max(2) as u64)
            .into_par_iter()
            .map(|i| match cover_m(hs.wrapping_add(i)) {
                Some(v) => le(v, m, || format!("M {v}")),
                None => Outcome::Fail(f64::NAN, "cover failed".into()),
            })
            .collect(),
    );
    vec![networks, monotone, covers, regular, lam_check, m_check]
}

/// All fitted constants for one seed.
pub fn calibrate(seed: u64, count: usize) -> Calibration {
    let (n, n0) = heis_calibration(seed, count);
    let (cp, small, tilt) = planes_calibration(seed, count);
    let (lam, m) = covering_calibration(seed, count / 100);
    Calibration {
        heis_pythagoras_n: n,
        heis_two_plane_n0: n0,
        euclid_c_p: cp,
        small_angle_d: small,
        tilting_d: tilt,
        network_lambda: lam,
        cover_m: m,
    }
}

/// Holdout checks for previously fitted constants.
pub fn holdout(cal: &Calibration, seed: u64, count: usize) -> Vec<Check> {
    let mut out = heis_holdout(&(cal.heis_pythagoras_n, cal.heis_two_plane_n0), seed, count);
    out.extend(planes_holdout(&(cal.euclid_c_p, cal.small_angle_d, cal.tilting_d), seed, count));
    let hs = seed.wrapping_add(HOLDOUT_OFFSET);
    let nets = (count / 100).max(1) as u64;
    out.push(fold(
        &format!("network λ holdout (λ = {:.4})", cal.network_lambda),
        (0..nets)
            .into_par_iter()
            .map(|i| match network_ratio(hs.wrapping_add(i), 2.0) {
                Some(v) => le(v, cal.network_lambda, || format!("ratio {v}")),
                None => Outcome::Skip,
            })
            .collect(),
    ));
    out.push(fold(
        &format!("spiral cover M holdout (M = {:.4})", cal.cover_m),
        (0..(nets / 4).max(2))
            .into_par_iter()
            .map(|i| match cover_m(hs.wrapping_add(i)) {
                Some(v) => le(v, cal.cover_m, || format!("M {v}")),
                None => Outcome::Fail(f64::NAN, "cover failed".into()),
            })
            .collect(),
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permutations_are_distinct() {
        let mut p = PERMS.to_vec();
        p.sort();
        p.dedup();
        assert_eq!(p.len(), 24);
    }

    #[test]
    fn unknown_suite() {
        assert!(matches!(run_suite("nope", &SuiteOptions::default()), Err(Error::Spec(_))));
    }

    #[test]
    fn fold_counts() {
        let c = fold(
            "x",
            vec![
                Outcome::Pass(1.0),
                Outcome::Skip,
                Outcome::Fail(3.0, "bad".into()),
                Outcome::Fail(2.0, "worse".into()),
            ],
        );
        assert_eq!((c.cases, c.skipped, c.violations), (3, 1, 2));
        assert_eq!(c.worst, 3.0);
        assert_eq!(c.first_failure.as_deref(), Some("bad"));
    }

    #[test]
    fn small_suites_pass() {
        let opts = SuiteOptions { seed: 5, effort: 0.02 };
        for name in ["metric", "menger", "dyadic"] {
            let r = run_suite(name, &opts).unwrap();
            for c in &r.checks {
                assert!(c.passed(), "{name}/{}: {:?}", c.name, c.first_failure);
            }
        }
    }
}
