//! Seeded synthetic datasets.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heisenberg::horizontal_lift;
use crate::space::{Ambient, MetricSpace};

pub const MAX_DEPTH: u32 = 8;
/// Amplitude of the zig-zag tent angles `θ_m = C m^{-2/p}`.
pub const ZIGZAG_C: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GeneratorKind {
    Line,
    Circle,
    ParallelLines {
        eps: f64,
        r: f64,
    },
    /// `n` is ignored: the set has `4^depth` points.
    Cantor4 {
        depth: u32,
    },
    PerturbedLine {
        noise: f64,
    },
    ZigzagLift {
        p: f64,
        depth: u32,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    #[serde(flatten)]
    pub kind: GeneratorKind,
    pub n: usize,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn new(kind: GeneratorKind, n: usize, seed: u64) -> Self {
        GeneratorSpec { kind, n, seed }
    }
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeneratorKind::Line => write!(f, "line"),
            GeneratorKind::Circle => write!(f, "circle"),
            GeneratorKind::ParallelLines { eps, r } => write!(f, "parallel-lines:eps={eps},r={r}"),
            GeneratorKind::Cantor4 { depth } => write!(f, "cantor4:depth={depth}"),
            GeneratorKind::PerturbedLine { noise } => write!(f, "perturbed-line:noise={noise}"),
            GeneratorKind::ZigzagLift { p, depth } => write!(f, "zigzag-lift:p={p},depth={depth}"),
        }
    }
}

/// Parses `kind[:key=value,...]`, e.g. `parallel-lines:eps=0.125,r=1`.
impl FromStr for GeneratorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut params = std::collections::BTreeMap::new();
        for kv in rest.split(',').filter(|p| !p.is_empty()) {
            let (k, v) = kv.split_once('=').ok_or_else(|| Error::Spec(format!("expected key=value, got `{kv}`")))?;
            let v: f64 = v.trim().parse().map_err(|_| Error::Spec(format!("`{k}` is not a number: `{v}`")))?;
            params.insert(k.trim().to_string(), v);
        }
        let mut take = |k: &str, default: Option<f64>| -> Result<f64> {
            params.remove(k).or(default).ok_or_else(|| Error::Spec(format!("{name} needs `{k}`")))
        };
        let depth = |v: f64| -> Result<u32> {
            if v.fract() != 0.0 || v < 0.0 {
                return Err(Error::Spec(format!("depth must be a nonnegative integer, got {v}")));
            }
            Ok(v as u32)
        };
        let kind = match name {
            "line" => GeneratorKind::Line,
            "circle" => GeneratorKind::Circle,
            "parallel-lines" => GeneratorKind::ParallelLines { eps: take("eps", None)?, r: take("r", Some(1.0))? },
            "cantor4" => GeneratorKind::Cantor4 { depth: depth(take("depth", None)?)? },
            "perturbed-line" => GeneratorKind::PerturbedLine { noise: take("noise", None)? },
            "zigzag-lift" => GeneratorKind::ZigzagLift { p: take("p", None)?, depth: depth(take("depth", None)?)? },
            other => return Err(Error::Spec(format!("unknown generator `{other}`"))),
        };
        if let Some(k) = params.keys().next() {
            return Err(Error::Spec(format!("unknown parameter `{k}` for {name}")));
        }
        Ok(kind)
    }
}

fn validate(spec: &GeneratorSpec) -> Result<()> {
    let bad = |m: String| Err(Error::Spec(m));
    match spec.kind {
        GeneratorKind::Line | GeneratorKind::PerturbedLine { .. } if spec.n < 2 => bad("line needs n ≥ 2".into()),
        GeneratorKind::Circle if spec.n < 3 => bad("circle needs n ≥ 3".into()),
        GeneratorKind::ParallelLines { eps, r } => {
            if !(eps > 0.0 && eps <= 0.5) {
                return bad(format!("ε must lie in (0, 1/2], got {eps}"));
            }
            if !(r > 0.0 && r.is_finite()) {
                return bad(format!("r must be positive, got {r}"));
            }
            if spec.n < 4 || !spec.n.is_multiple_of(2) {
                return bad(format!("parallel-lines needs an even n ≥ 4, got {}", spec.n));
            }
            Ok(())
        }
        GeneratorKind::Cantor4 { depth } if depth == 0 || depth > MAX_DEPTH => {
            bad(format!("cantor4 depth must lie in 1..={MAX_DEPTH}, got {depth}"))
        }
        GeneratorKind::PerturbedLine { noise } if !(0.0..1.0).contains(&noise) => {
            bad(format!("noise must lie in [0, 1), got {noise}"))
        }
        GeneratorKind::ZigzagLift { p, depth } => {
            if depth > MAX_DEPTH {
                return bad(format!("zigzag depth must be ≤ {MAX_DEPTH}, got {depth}"));
            }
            if !(p > 0.0 && p.is_finite()) {
                return bad(format!("p must be positive, got {p}"));
            }
            if spec.n < 2 {
                return bad("zigzag-lift needs n ≥ 2".into());
            }
            Ok(())
        }
        _ => Ok(()),
    }
}

/// Builds the dataset; a pure function of the spec.
pub fn generate(spec: &GeneratorSpec) -> Result<MetricSpace> {
    validate(spec)?;
    let n = spec.n;
    let label = format!("{}(n={},seed={})", spec.kind, n, spec.seed);
    let e2 = Ambient::Euclidean { dim: 2 };
    let space = match spec.kind {
        GeneratorKind::Line => {
            let pts: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64 / (n - 1) as f64, 0.0]).collect();
            MetricSpace::from_coords(&pts, e2, Some(vec![1.0 / n as f64; n]), 1.0)?
        }
        GeneratorKind::Circle => {
            let pts: Vec<Vec<f64>> = (0..n)
                .map(|i| {
                    let a = std::f64::consts::TAU * i as f64 / n as f64;
                    vec![a.cos(), a.sin()]
                })
                .collect();
            MetricSpace::from_coords(&pts, e2, Some(vec![std::f64::consts::TAU / n as f64; n]), 1.0)?
        }
        GeneratorKind::ParallelLines { eps, r } => {
            let half = n / 2;
            let mut pts = Vec::with_capacity(n);
            for row in [0.0, eps * r] {
                for i in 0..half {
                    pts.push(vec![r * i as f64 / (half - 1) as f64, row]);
                }
            }
            MetricSpace::from_coords(&pts, e2, Some(vec![r / half as f64; n]), 1.0)?
        }
        GeneratorKind::Cantor4 { depth } => {
            let count = 4usize.pow(depth);
            let side = 0.25f64.powi(depth as i32);
            let pts: Vec<Vec<f64>> = (0..count)
                .map(|mut code| {
                    let (mut x, mut y, mut scale) = (0.0, 0.0, 1.0);
                    for _ in 0..depth {
                        let digit = code % 4;
                        code /= 4;
                        scale *= 0.25;
                        // corner squares sit at offset 0 or 3/4 of the parent side
                        x += if digit & 1 == 1 { 3.0 * scale } else { 0.0 };
                        y += if digit & 2 == 2 { 3.0 * scale } else { 0.0 };
                    }
                    vec![x + 0.5 * side, y + 0.5 * side]
                })
                .collect();
            MetricSpace::from_coords(&pts, e2, Some(vec![1.0 / count as f64; count]), 1.0)?
        }
        GeneratorKind::PerturbedLine { noise } => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let pts: Vec<Vec<f64>> = (0..n)
                .map(|i| {
                    let dy = if noise > 0.0 { rng.gen_range(-noise..=noise) } else { 0.0 };
                    vec![i as f64 / (n - 1) as f64, dy]
                })
                .collect();
            MetricSpace::from_coords(&pts, e2, Some(vec![1.0 / n as f64; n]), 1.0)?
        }
        GeneratorKind::ZigzagLift { p, depth } => {
            let shadow = zigzag_shadow(p, depth, n);
            let lifted = horizontal_lift(&shadow, 0.0);
            let length: f64 =
                shadow.windows(2).map(|w| ((w[1][0] - w[0][0]).powi(2) + (w[1][1] - w[0][1]).powi(2)).sqrt()).sum();
            let pts: Vec<Vec<f64>> = lifted.iter().map(|h| h.to_vec()).collect();
            let m = pts.len();
            MetricSpace::from_coords(&pts, Ambient::Heisenberg { n: 1 }, Some(vec![length / m as f64; m]), 1.0)?
        }
    };
    Ok(space.with_label(label))
}

/// Planar polyline of the zig-zag scheme: start from `[0,1]×{0}` and replace
/// each segment at stage `m` by a tent with base angle `θ_m = C m^{-2/p}`.
/// Every final segment is then cut into `⌈(n−1)/2^depth⌉` equal pieces, so the
/// point count is at least `n`.
pub fn zigzag_shadow(p: f64, depth: u32, n: usize) -> Vec<[f64; 2]> {
    let mut poly = vec![[0.0, 0.0], [1.0, 0.0]];
    for m in 1..=depth {
        let th = ZIGZAG_C * (m as f64).powf(-2.0 / p);
        let mut next = Vec::with_capacity(2 * poly.len());
        for w in poly.windows(2) {
            let (a, b) = (w[0], w[1]);
            let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
            let h = 0.5 * th.tan();
            // apex above the midpoint, to the left of the segment direction
            let apex = [a[0] + 0.5 * dx - h * dy, a[1] + 0.5 * dy + h * dx];
            next.push(a);
            next.push(apex);
        }
        next.push(*poly.last().unwrap());
        poly = next;
    }
    let segs = poly.len() - 1;
    let pieces = (n.saturating_sub(1)).div_ceil(segs).max(1);
    let mut out = Vec::with_capacity(segs * pieces + 1);
    for w in poly.windows(2) {
        for k in 0..pieces {
            let s = k as f64 / pieces as f64;
            out.push([w[0][0] + s * (w[1][0] - w[0][0]), w[0][1] + s * (w[1][1] - w[0][1])]);
        }
    }
    out.push(*poly.last().unwrap());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_points_and_weights() {
        let sp = generate(&GeneratorSpec::new(GeneratorKind::Line, 4, 0)).unwrap();
        for (i, x) in [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0].iter().enumerate() {
            assert!((sp.point(i)[0] - x).abs() < 1e-15);
            assert_eq!(sp.weight(i), 0.25);
        }
    }

    #[test]
    fn cantor_counts() {
        let sp = generate(&GeneratorSpec::new(GeneratorKind::Cantor4 { depth: 2 }, 0, 0)).unwrap();
        assert_eq!(sp.len(), 16);
        assert!(sp.weights().iter().all(|&w| w == 1.0 / 16.0));
        assert_eq!(sp.s(), 1.0);
    }

    #[test]
    fn parallel_lines_shape() {
        let sp = generate(&GeneratorSpec::new(GeneratorKind::ParallelLines { eps: 0.125, r: 1.0 }, 64, 0)).unwrap();
        assert_eq!(sp.len(), 64);
        assert!((0..32).all(|i| sp.point(i)[1] == 0.0));
        assert!((32..64).all(|i| sp.point(i)[1] == 0.125));
    }

    #[test]
    fn spec_errors() {
        for k in [
            GeneratorKind::ParallelLines { eps: 0.75, r: 1.0 },
            GeneratorKind::Cantor4 { depth: 9 },
            GeneratorKind::PerturbedLine { noise: -1.0 },
            GeneratorKind::ZigzagLift { p: 2.0, depth: 12 },
        ] {
            assert!(matches!(generate(&GeneratorSpec::new(k, 64, 0)), Err(Error::Spec(_))));
        }
    }

    #[test]
    fn kind_parsing_round_trips() {
        for s in [
            "line",
            "circle",
            "parallel-lines:eps=0.125,r=1",
            "cantor4:depth=3",
            "perturbed-line:noise=0.01",
            "zigzag-lift:p=2,depth=3",
        ] {
            let k: GeneratorKind = s.parse().unwrap();
            assert_eq!(k.to_string().parse::<GeneratorKind>().unwrap(), k);
        }
        assert!("spiral".parse::<GeneratorKind>().is_err());
        assert!("cantor4:depth=2,x=1".parse::<GeneratorKind>().is_err());
    }

    #[test]
    fn zigzag_is_lift_of_its_shadow() {
        let spec = GeneratorSpec::new(GeneratorKind::ZigzagLift { p: 2.0, depth: 3 }, 33, 0);
        let sp = generate(&spec).unwrap();
        let shadow = zigzag_shadow(2.0, 3, 33);
        assert_eq!(sp.len(), shadow.len());
        let lifted = horizontal_lift(&shadow, 0.0);
        for (i, h) in lifted.iter().enumerate() {
            assert_eq!(sp.point(i), &h.to_vec()[..]);
        }
    }
}
