//! Geometric-lemma sums `Σ_{Q ⊆ Q₀} h(KQ)^p μ(Q) / μ(Q₀)` over a dyadic system.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coeffs::{self, IotaOptions, KappaOptions, PlaneSource};
use crate::dyadic::{CubeId, DyadicSystem};
use crate::error::{Error, Result};
use crate::space::{Ambient, MetricSpace, PointSet};

/// Coefficient evaluated on enlarged cubes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Coefficient {
    /// Fitted `β_q` over `k`-planes: affine in ℝ^d, horizontal in Hⁿ.
    Beta {
        q: f64,
        k: usize,
    },
    Kappa {
        options: KappaOptions,
    },
    /// `ι` of the best-fit plane chart.
    IotaPlane {
        q: f64,
        k: usize,
    },
    /// Upper end of the `ι_{q,k}` bracket.
    Iota {
        q: f64,
        k: usize,
        options: IotaOptions,
    },
}

impl Coefficient {
    pub fn tag(&self) -> String {
        match self {
            Coefficient::Beta { q, k } => format!("beta[q={q},k={k}]"),
            Coefficient::Kappa { .. } => "kappa".into(),
            Coefficient::IotaPlane { q, k } => format!("iota-plane[q={q},k={k}]"),
            Coefficient::Iota { q, k, .. } => format!("iota[q={q},k={k}]"),
        }
    }

    fn family(space: &MetricSpace, k: usize) -> Result<PlaneSource> {
        match space.ambient() {
            Ambient::Euclidean { .. } => Ok(PlaneSource::EuclideanFamily { k }),
            Ambient::Heisenberg { .. } => Ok(PlaneSource::HeisHorizontalFamily { k }),
            Ambient::Abstract => Err(Error::Ambient("plane coefficients need coordinates".into())),
        }
    }

    /// Value on `subset`; `raw` skips the clamp to `[0, 1]`.
    pub fn eval(&self, space: &MetricSpace, subset: &PointSet, raw: bool) -> Result<f64> {
        let v = match self {
            Coefficient::Beta { q, k } => coeffs::beta(space, subset, *q, &Self::family(space, *k)?)?,
            Coefficient::Kappa { options } => coeffs::kappa(space, subset, options)?,
            Coefficient::IotaPlane { q, k } => {
                let fit = coeffs::beta(space, subset, *q, &Self::family(space, *k)?)?;
                let plane = match fit.witness {
                    Some(coeffs::Witness::Plane { plane, .. }) => PlaneSource::Affine(plane),
                    Some(coeffs::Witness::Horizontal { plane, .. }) => PlaneSource::Horizontal(plane),
                    _ => return Err(Error::Postcondition("plane fit returned no plane".into())),
                };
                coeffs::iota_plane(space, subset, *q, &plane)?
            }
            Coefficient::Iota { q, k, options } => {
                let b = coeffs::iota_estimate(space, subset, *q, *k, options)?;
                return Ok(if raw { b.upper } else { b.upper.min(1.0) });
            }
        };
        Ok(if raw { v.raw } else { v.clamped })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelProfile {
    pub level: i32,
    /// `Σ h(KQ)^p μ(Q) / Σ μ(Q)` over the level.
    pub mean: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CarlesonReport {
    pub coefficient: String,
    pub p: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub j_max: i32,
    pub constant: f64,
    /// Normalized sum for every cube as `Q₀`, indexed by cube id.
    pub per_root: Vec<f64>,
    pub per_level: Vec<LevelProfile>,
}

fn check_params(p: f64, k: f64) -> Result<()> {
    if !(p > 0.0) {
        return Err(Error::Domain(format!("p must be positive, got {p}")));
    }
    if !(k >= 1.0) {
        return Err(Error::Domain(format!("K must be ≥ 1, got {k}")));
    }
    Ok(())
}

/// `h(KQ)^p μ(Q)` for the listed cubes, in list order.
fn terms<H>(space: &MetricSpace, system: &DyadicSystem, cubes: &[CubeId], h: &H, p: f64, k: f64) -> Result<Vec<f64>>
where
    H: Fn(&PointSet) -> Result<f64> + Sync,
{
    cubes
        .par_iter()
        .map(|&c| {
            let cube = system.cube(c);
            if cube.is_singleton() || cube.diam == 0.0 {
                return Ok(0.0);
            }
            let enlarged = system.enlarge(space, c, k)?;
            Ok(h(&enlarged)?.powf(p) * cube.mass)
        })
        .collect()
}

/// Sum over every descendant of `q0` down to `j_max`, normalized by `μ(Q₀)`.
pub fn glem_sum<H>(space: &MetricSpace, system: &DyadicSystem, h: &H, p: f64, k: f64, q0: CubeId) -> Result<f64>
where
    H: Fn(&PointSet) -> Result<f64> + Sync,
{
    check_params(p, k)?;
    if q0 >= system.len() {
        return Err(Error::Domain(format!("no cube {q0}")));
    }
    let sub = system.subtree(q0);
    let t = terms(space, system, &sub, h, p, k)?;
    let mass = system.cube(q0).mass;
    Ok(if mass > 0.0 { t.iter().sum::<f64>() / mass } else { 0.0 })
}

/// [`glem_sum`] with every cube as `Q₀`; the constant is the largest sum.
pub fn carleson_constant<H>(
    space: &MetricSpace,
    system: &DyadicSystem,
    tag: &str,
    h: &H,
    p: f64,
    k: f64,
) -> Result<CarlesonReport>
where
    H: Fn(&PointSet) -> Result<f64> + Sync,
{
    check_params(p, k)?;
    let all: Vec<CubeId> = (0..system.len()).collect();
    let t = terms(space, system, &all, h, p, k)?;
    // children sit on deeper levels, so a reverse level sweep is bottom-up
    let mut acc = t.clone();
    for level in system.levels.iter().rev() {
        for &c in level {
            let s: f64 = system.cube(c).children.iter().map(|&ch| acc[ch]).sum();
            acc[c] += s;
        }
    }
    let per_root: Vec<f64> = all
        .iter()
        .map(|&c| {
            let m = system.cube(c).mass;
            if m > 0.0 {
                acc[c] / m
            } else {
                0.0
            }
        })
        .collect();
    let constant = per_root.iter().copied().fold(0.0, f64::max);
    let per_level = system
        .levels
        .iter()
        .enumerate()
        .map(|(l, ids)| {
            let mass: f64 = ids.iter().map(|&c| system.cube(c).mass).sum();
            let sum: f64 = ids.iter().map(|&c| t[c]).sum();
            LevelProfile { level: system.j_min + l as i32, mean: if mass > 0.0 { sum / mass } else { 0.0 } }
        })
        .collect();
    Ok(CarlesonReport { coefficient: tag.to_string(), p, k, j_max: system.j_max, constant, per_root, per_level })
}

/// [`carleson_constant`] for a named coefficient, clamped unless `raw`.
pub fn carleson_report(
    space: &MetricSpace,
    system: &DyadicSystem,
    coeff: &Coefficient,
    p: f64,
    k: f64,
    raw: bool,
) -> Result<CarlesonReport> {
    let h = |s: &PointSet| coeff.eval(space, s, raw);
    carleson_constant(space, system, &coeff.tag(), &h, p, k)
}
