//! Batch front end: configuration, analysis reports, embeddings, suites and
//! dataset generation.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use rectiflat_core::carleson::{carleson_report, CarlesonReport, Coefficient};
use rectiflat_core::coeffs::{IotaBracket, IotaOptions, KappaOptions, DEFAULT_EXACT_CAP, DEFAULT_MC_SAMPLES};
use rectiflat_core::menger::{self, AnchorRanking, EmbeddingWitness};
use rectiflat_core::suites::{self, Check, SuiteOptions, SuiteReport};
use rectiflat_core::{build_dyadic, io, Ambient, DyadicSystem, GeneratorSpec, MetricSpace};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error at `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("usage error: {0}")]
    Usage(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error(transparent)]
    Core(#[from] rectiflat_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use rectiflat_core::Error as E;
        match self {
            CliError::Config { .. } | CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
            CliError::Invariant(_) => 4,
            CliError::Core(e) => match e {
                E::Io(_) | E::Parse(_) => 3,
                E::Postcondition(_) => 4,
                _ => 2,
            },
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn config_err(field: &str, message: impl Into<String>) -> CliError {
    CliError::Config { field: field.into(), message: message.into() }
}

/// Exponents as numbers, with `q = ∞` written as `"inf"` since JSON has no infinity.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Exponent {
    Num(f64),
    Text(String),
}

impl Exponent {
    fn of(v: f64) -> Self {
        if v.is_finite() {
            Exponent::Num(v)
        } else {
            Exponent::Text(if v > 0.0 { "inf".into() } else { "-inf".into() })
        }
    }

    fn value<E: serde::de::Error>(self) -> Result<f64, E> {
        match self {
            Exponent::Num(v) => Ok(v),
            Exponent::Text(t) if t == "-inf" => Ok(f64::NEG_INFINITY),
            Exponent::Text(t) => parse_f64(&t).map_err(E::custom),
        }
    }
}

mod exponent {
    use super::Exponent;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        Exponent::of(*v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Exponent::deserialize(d)?.value()
    }
}

mod exponents {
    use super::Exponent;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|&x| Exponent::of(x)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<Exponent>::deserialize(d)?.into_iter().map(Exponent::value).collect()
    }
}

mod ambient_str {
    use rectiflat_core::Ambient;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(a: &Ambient, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&a.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Ambient, D::Error> {
        let s = String::deserialize(d)?;
        Ambient::parse(&s).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoeffKind {
    Beta,
    Kappa,
    /// Two-sided bracket of the ι number.
    Iota,
    IotaPlane,
}

/// One coefficient with its exponent grids.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoeffGrid {
    pub kind: CoeffKind,
    /// Averaging exponents; ignored for κ.
    #[serde(default = "default_q", with = "exponents")]
    pub q: Vec<f64>,
    /// Carleson exponents.
    #[serde(default = "default_p")]
    pub p: Vec<f64>,
    /// Cube enlargement factors.
    #[serde(rename = "K", default = "default_k")]
    pub k_factor: Vec<f64>,
    /// Plane dimension.
    #[serde(default = "one")]
    pub k: usize,
}

fn default_q() -> Vec<f64> {
    vec![2.0]
}
fn default_p() -> Vec<f64> {
    vec![2.0]
}
fn default_k() -> Vec<f64> {
    vec![2.0]
}
fn one() -> usize {
    1
}

impl CoeffGrid {
    pub fn new(kind: CoeffKind) -> Self {
        let q = if matches!(kind, CoeffKind::Iota | CoeffKind::IotaPlane) { vec![1.0] } else { default_q() };
        CoeffGrid { kind, q, p: default_p(), k_factor: default_k(), k: 1 }
    }

    /// Parses `beta`, `beta[q=2]`, `iota[q=1,k=1]`; several `q=` entries add
    /// grid points.
    pub fn parse(s: &str) -> CliResult<Self> {
        let (name, rest) = match s.split_once('[') {
            Some((n, r)) => (n, r.strip_suffix(']').ok_or_else(|| CliError::Usage(format!("unclosed `[` in `{s}`")))?),
            None => (s, ""),
        };
        let kind = match name.trim() {
            "beta" => CoeffKind::Beta,
            "kappa" => CoeffKind::Kappa,
            "iota" => CoeffKind::Iota,
            "iota-plane" => CoeffKind::IotaPlane,
            other => return Err(CliError::Usage(format!("unknown coefficient `{other}`"))),
        };
        let mut g = CoeffGrid::new(kind);
        let mut qs = Vec::new();
        for kv in rest.split(',').filter(|x| !x.trim().is_empty()) {
            let (k, v) = kv.split_once('=').ok_or_else(|| CliError::Usage(format!("expected key=value in `{s}`")))?;
            match k.trim() {
                "q" => qs.push(parse_f64(v)?),
                "k" => g.k = v.trim().parse().map_err(|_| CliError::Usage(format!("bad k in `{s}`")))?,
                other => return Err(CliError::Usage(format!("unknown key `{other}` in `{s}`"))),
            }
        }
        if !qs.is_empty() {
            g.q = qs;
        }
        Ok(g)
    }

    fn coefficients(&self, cfg: &AnalysisConfig) -> Vec<Coefficient> {
        let kappa = cfg.kappa_options();
        match self.kind {
            CoeffKind::Kappa => vec![Coefficient::Kappa { options: kappa }],
            CoeffKind::Beta => self.q.iter().map(|&q| Coefficient::Beta { q, k: self.k }).collect(),
            CoeffKind::IotaPlane => self.q.iter().map(|&q| Coefficient::IotaPlane { q, k: self.k }).collect(),
            CoeffKind::Iota => self
                .q
                .iter()
                .map(|&q| Coefficient::Iota { q, k: self.k, options: IotaOptions { kappa, ..IotaOptions::default() } })
                .collect(),
        }
    }
}

/// `inf`, `infinity` and plain numbers.
pub fn parse_f64(s: &str) -> CliResult<f64> {
    match s.trim() {
        "inf" | "infinity" | "∞" => Ok(f64::INFINITY),
        t => t.parse().map_err(|_| CliError::Usage(format!("`{t}` is not a number"))),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generate: Option<GeneratorSpec>,
    #[serde(with = "ambient_str", default = "default_ambient")]
    pub ambient: Ambient,
    #[serde(default = "one_f")]
    pub s: f64,
    pub coefficients: Vec<CoeffGrid>,
    #[serde(default = "default_cap")]
    pub exact_cap: usize,
    #[serde(default = "default_mc")]
    pub mc_samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

fn default_ambient() -> Ambient {
    Ambient::Euclidean { dim: 2 }
}
fn one_f() -> f64 {
    1.0
}
fn default_cap() -> usize {
    DEFAULT_EXACT_CAP
}
fn default_mc() -> usize {
    DEFAULT_MC_SAMPLES
}

impl AnalysisConfig {
    pub fn new(coefficients: Vec<CoeffGrid>) -> Self {
        AnalysisConfig {
            input: None,
            generate: None,
            ambient: default_ambient(),
            s: 1.0,
            coefficients,
            exact_cap: DEFAULT_EXACT_CAP,
            mc_samples: DEFAULT_MC_SAMPLES,
            seed: 0,
            out: None,
        }
    }

    pub fn kappa_options(&self) -> KappaOptions {
        KappaOptions { exact_cap: self.exact_cap, samples: self.mc_samples, seed: self.seed }
    }

    pub fn validate(&self) -> CliResult<()> {
        match (&self.input, &self.generate) {
            (None, None) => return Err(config_err("input", "one of `input` or `generate` is required")),
            (Some(_), Some(_)) => return Err(config_err("input", "`input` and `generate` are exclusive")),
            _ => {}
        }
        if !(self.s > 0.0 && self.s.is_finite()) {
            return Err(config_err("s", format!("must be positive, got {}", self.s)));
        }
        if self.coefficients.is_empty() {
            return Err(config_err("coefficients", "at least one coefficient is required"));
        }
        for (i, c) in self.coefficients.iter().enumerate() {
            let at = |f: &str| format!("coefficients[{i}].{f}");
            if c.q.is_empty() || c.p.is_empty() || c.k_factor.is_empty() {
                return Err(config_err(&at("q/p/K"), "grids must be nonempty"));
            }
            if let Some(q) = c.q.iter().find(|&&q| !(q > 0.0)) {
                return Err(config_err(&at("q"), format!("exponents must be positive, got {q}")));
            }
            if let Some(p) = c.p.iter().find(|&&p| !(p > 0.0 && p.is_finite())) {
                return Err(config_err(&at("p"), format!("exponents must be positive and finite, got {p}")));
            }
            if let Some(k) = c.k_factor.iter().find(|&&k| !(k >= 1.0 && k.is_finite())) {
                return Err(config_err(&at("K"), format!("enlargement must be ≥ 1, got {k}")));
            }
            if c.k == 0 {
                return Err(config_err(&at("k"), "plane dimension must be ≥ 1"));
            }
        }
        if self.mc_samples == 0 {
            return Err(config_err("mc_samples", "must be positive"));
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| config_err("<toml>", e.to_string()))
    }

    pub fn to_toml(&self) -> CliResult<String> {
        toml::to_string(self).map_err(|e| config_err("<toml>", e.to_string()))
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| config_err("<json>", e.to_string()))
    }

    pub fn to_json(&self) -> CliResult<String> {
        serde_json::to_string_pretty(self).map_err(|e| config_err("<json>", e.to_string()))
    }

    /// Reads a `.toml` or `.json` config.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        if path.extension().is_some_and(|e| e == "json") {
            Self::from_json(&text)
        } else {
            Self::from_toml(&text)
        }
    }

    pub fn load_space(&self) -> CliResult<MetricSpace> {
        self.validate()?;
        if let Some(spec) = &self.generate {
            return Ok(rectiflat_core::generate(spec)?);
        }
        let path = self.input.as_ref().expect("validated");
        if !path.exists() {
            return Err(CliError::Io(format!("{}: no such file", path.display())));
        }
        Ok(io::load(path, self.ambient, self.s)?)
    }
}

// ---------------------------------------------------------------- reports

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpaceSummary {
    pub label: String,
    pub n: usize,
    pub ambient: String,
    pub s: f64,
    pub diam: f64,
    pub total_mass: f64,
    pub default_weights: bool,
}

impl SpaceSummary {
    pub fn of(space: &MetricSpace) -> CliResult<Self> {
        Ok(SpaceSummary {
            label: space.label().to_string(),
            n: space.len(),
            ambient: space.ambient().to_string(),
            s: space.s(),
            diam: space.diam(&space.all())?,
            total_mass: space.total_mass(),
            default_weights: space.uses_default_weights(),
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DyadicSummary {
    pub j_min: i32,
    pub j_max: i32,
    pub c0: f64,
    pub cubes: usize,
    pub card_constant: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CubeRow {
    pub id: usize,
    pub level: i32,
    pub center: usize,
    pub size: usize,
    pub mass: f64,
    pub diam: f64,
    /// Coefficient tag and `K` → value on `KQ`; absent for singletons.
    pub values: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BracketRow {
    #[serde(with = "exponent")]
    pub q: f64,
    pub k: usize,
    pub lower: f64,
    pub upper: f64,
    pub upper_source: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub schema_version: u32,
    pub config: AnalysisConfig,
    pub space: SpaceSummary,
    pub dyadic: DyadicSummary,
    pub cubes: Vec<CubeRow>,
    pub carleson: Vec<CarlesonReport>,
    pub iota_brackets: Vec<BracketRow>,
    pub suites: Vec<Check>,
}

fn value_key(tag: &str, k: f64) -> String {
    format!("{tag}@K={k}")
}

/// Coefficient tables, Carleson reports, ι brackets and inequality checks.
pub fn cmd_analyze(cfg: &AnalysisConfig) -> CliResult<AnalysisReport> {
    let space = cfg.load_space()?;
    let system = build_dyadic(&space);
    let check = system.verify(&space).map_err(|e| CliError::Invariant(e.to_string()))?;
    let dyadic = DyadicSummary {
        j_min: system.j_min,
        j_max: system.j_max,
        c0: check.c0,
        cubes: system.len(),
        card_constant: system.card_constant(space.s()),
    };
    let mut cubes: Vec<CubeRow> = system
        .cubes
        .iter()
        .map(|c| CubeRow {
            id: c.id,
            level: c.level,
            center: c.center,
            size: c.members.len(),
            mass: c.mass,
            diam: c.diam,
            values: BTreeMap::new(),
        })
        .collect();
    let mut carleson = Vec::new();
    let mut brackets = Vec::new();
    for grid in &cfg.coefficients {
        for coeff in grid.coefficients(cfg) {
            for &k in &grid.k_factor {
                let mut first = true;
                for &p in &grid.p {
                    let rep = carleson_report(&space, &system, &coeff, p, k, false)?;
                    if first {
                        // h = (term / μ)^{1/p} is not recoverable here, so evaluate directly
                        fill_values(&space, &system, &coeff, k, &mut cubes)?;
                        first = false;
                    }
                    carleson.push(rep);
                }
            }
        }
        if grid.kind == CoeffKind::Iota {
            for &q in &grid.q {
                let b: IotaBracket = rectiflat_core::iota_estimate(
                    &space,
                    &space.all(),
                    q,
                    grid.k,
                    &IotaOptions { kappa: cfg.kappa_options(), ..IotaOptions::default() },
                )?;
                brackets.push(BracketRow {
                    q,
                    k: grid.k,
                    lower: b.lower,
                    upper: b.upper,
                    upper_source: b.upper_witness.source,
                });
            }
        }
    }
    let suites = analysis_checks(&space, &system);
    Ok(AnalysisReport {
        schema_version: SCHEMA_VERSION,
        config: cfg.clone(),
        space: SpaceSummary::of(&space)?,
        dyadic,
        cubes,
        carleson,
        iota_brackets: brackets,
        suites,
    })
}

fn fill_values(
    space: &MetricSpace,
    system: &DyadicSystem,
    coeff: &Coefficient,
    k: f64,
    rows: &mut [CubeRow],
) -> CliResult<()> {
    use rayon::prelude::*;
    let vals: Vec<Option<f64>> = (0..system.len())
        .into_par_iter()
        .map(|c| {
            let cube = system.cube(c);
            if cube.is_singleton() || cube.diam == 0.0 {
                return Ok(None);
            }
            let s = system.enlarge(space, c, k)?;
            coeff.eval(space, &s, true).map(Some)
        })
        .collect::<Result<_, rectiflat_core::Error>>()?;
    let key = value_key(&coeff.tag(), k);
    for (row, v) in rows.iter_mut().zip(vals) {
        if let Some(v) = v {
            row.values.insert(key.clone(), v);
        }
    }
    Ok(())
}

/// Exact inequalities that apply to the analysed space itself.
fn analysis_checks(space: &MetricSpace, system: &DyadicSystem) -> Vec<Check> {
    let mut out = Vec::new();
    if space.has_coords() {
        for q in [1.0, 2.0] {
            out.push(suites::iota_two_beta_check(std::slice::from_ref(space), q, 2.0));
        }
    }
    let _ = system;
    out
}

/// Per-cube table as CSV: fixed columns, then one column per value key.
pub fn cubes_csv(report: &AnalysisReport) -> String {
    let keys: std::collections::BTreeSet<&String> = report.cubes.iter().flat_map(|c| c.values.keys()).collect();
    let mut out = String::from("id,level,center,size,mass,diam");
    for k in &keys {
        let _ = write!(out, ",\"{k}\"");
    }
    out.push('\n');
    for c in &report.cubes {
        let _ = write!(out, "{},{},{},{},{:?},{:?}", c.id, c.level, c.center, c.size, c.mass, c.diam);
        for k in &keys {
            match c.values.get(*k) {
                Some(v) => {
                    let _ = write!(out, ",{v:?}");
                }
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EmbedReport {
    pub schema_version: u32,
    pub space: SpaceSummary,
    pub ranking: AnchorRanking,
    pub witness: EmbeddingWitness,
    /// `κ` of the whole space, for the `L¹` comparison.
    pub kappa: f64,
}

/// Anchor selection, the sign map and its distortion certificates.
pub fn cmd_embed(cfg: &AnalysisConfig) -> CliResult<EmbedReport> {
    let space = cfg.load_space()?;
    let all = space.all();
    let ranking = menger::rank_anchor_pairs(&space, &all, menger::DEFAULT_ANCHOR_C, 1)?;
    let (p, q) = *ranking.pairs.first().ok_or_else(|| CliError::Invariant("no anchor pair".into()))?;
    let witness = menger::menger_map(&space, &all, p, q)?;
    let kappa =
        if space.diam(&all)? > 0.0 { rectiflat_core::kappa(&space, &all, &cfg.kappa_options())?.raw } else { 0.0 };
    Ok(EmbedReport { schema_version: SCHEMA_VERSION, space: SpaceSummary::of(&space)?, ranking, witness, kappa })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerifyReport {
    pub schema_version: u32,
    pub suite: SuiteReport,
}

/// Runs a named suite; any violation is an error with exit code 4.
pub fn cmd_verify(suite: &str, opts: &SuiteOptions) -> CliResult<VerifyReport> {
    if !suites::SUITES.contains(&suite) {
        return Err(CliError::Usage(format!("unknown suite `{suite}`; expected one of {}", suites::SUITES.join(", "))));
    }
    let report = suites::run_suite(suite, opts)?;
    Ok(VerifyReport { schema_version: SCHEMA_VERSION, suite: report })
}

/// Writes the generated dataset as CSV and returns its point count.
pub fn cmd_generate(spec: &GeneratorSpec, out: &Path) -> CliResult<usize> {
    let space = rectiflat_core::generate(spec)?;
    let file = std::fs::File::create(out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    io::write_csv(&space, std::io::BufWriter::new(file))?;
    Ok(space.len())
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Invariant(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Writes `text` to `out`, or stdout when absent.
pub fn emit(text: &str, out: Option<&Path>) -> CliResult<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rectiflat_core::GeneratorKind;

    fn line_cfg(n: usize) -> AnalysisConfig {
        let mut c = AnalysisConfig::new(vec![CoeffGrid::new(CoeffKind::Beta)]);
        c.generate = Some(GeneratorSpec::new(GeneratorKind::Line, n, 0));
        c
    }

    #[test]
    fn coefficient_flags() {
        let g = CoeffGrid::parse("beta[q=1,q=inf,k=2]").unwrap();
        assert_eq!(g.kind, CoeffKind::Beta);
        assert_eq!(g.q, vec![1.0, f64::INFINITY]);
        assert_eq!(g.k, 2);
        assert_eq!(CoeffGrid::parse("kappa").unwrap().kind, CoeffKind::Kappa);
        assert_eq!(CoeffGrid::parse("iota").unwrap().q, vec![1.0]);
        assert!(CoeffGrid::parse("gamma").is_err());
        assert!(CoeffGrid::parse("beta[q=2").is_err());
        assert!(CoeffGrid::parse("beta[r=2]").is_err());
    }

    #[test]
    fn config_round_trips() {
        let mut c = line_cfg(16);
        c.coefficients.push(CoeffGrid::parse("iota[q=inf]").unwrap());
        c.coefficients[0].p = vec![1.0, 2.0];
        c.out = Some("report.json".into());
        assert_eq!(AnalysisConfig::from_toml(&c.to_toml().unwrap()).unwrap(), c);
        assert_eq!(AnalysisConfig::from_json(&c.to_json().unwrap()).unwrap(), c);
    }

    #[test]
    fn validation_names_fields() {
        let mut c = line_cfg(8);
        c.coefficients[0].p.clear();
        match c.validate() {
            Err(CliError::Config { field, .. }) => assert_eq!(field, "coefficients[0].q/p/K"),
            other => panic!("{other:?}"),
        }
        let mut c = line_cfg(8);
        c.generate = None;
        assert!(matches!(c.validate(), Err(CliError::Config { .. })));
        assert_eq!(c.validate().unwrap_err().exit_code(), 2);
    }

    #[test]
    fn line_report_has_zero_constants() {
        let r = cmd_analyze(&line_cfg(16)).unwrap();
        assert!(r.carleson.iter().all(|c| c.constant == 0.0));
        assert_eq!(r.schema_version, SCHEMA_VERSION);
        assert!(cubes_csv(&r).lines().count() == r.cubes.len() + 1);
    }

    #[test]
    fn missing_input_is_io() {
        let mut c = line_cfg(4);
        c.generate = None;
        c.input = Some("/definitely/not/here.csv".into());
        let e = cmd_analyze(&c).unwrap_err();
        assert_eq!(e.exit_code(), 3);
    }

    #[test]
    fn embed_on_a_line() {
        let mut c = AnalysisConfig::new(vec![CoeffGrid::new(CoeffKind::Beta)]);
        c.generate = Some(GeneratorSpec::new(GeneratorKind::Line, 4, 0));
        let r = cmd_embed(&c).unwrap();
        assert_eq!(r.witness.linf_distortion, 0.0);
        assert_eq!(r.witness.l1_distortion, 0.0);
    }

    #[test]
    fn unknown_suite_is_usage() {
        let e = cmd_verify("nope", &SuiteOptions::default()).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }
}
