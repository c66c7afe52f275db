use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rectiflat_cli::{
    cmd_analyze, cmd_embed, cmd_generate, cmd_verify, cubes_csv, emit, parse_f64, to_json, AnalysisConfig, CliError,
    CliResult, CoeffGrid,
};
use rectiflat_core::suites::SuiteOptions;
use rectiflat_core::{Ambient, GeneratorKind, GeneratorSpec};

/// Flatness coefficients, Carleson sums and embeddings of finite metric spaces.
#[derive(Parser)]
#[command(name = "rectiflat", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Coefficient tables and Carleson constants over the dyadic cubes.
    Analyze(SpaceArgs),
    /// Menger anchor map and its distortion.
    Embed(SpaceArgs),
    /// Run an inequality suite.
    Verify {
        /// metric, dyadic, menger, heisenberg, planes or covering
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Multiplier on the default case counts.
        #[arg(long, default_value_t = 1.0)]
        effort: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a generated dataset as CSV.
    Generate {
        /// e.g. `circle`, `cantor4:depth=3`, `parallel-lines:eps=0.125`
        kind: String,
        #[arg(long, default_value_t = 64)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct SpaceArgs {
    /// TOML or JSON config; flags given alongside override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV or JSON dataset.
    #[arg(long, conflicts_with = "generate")]
    input: Option<PathBuf>,
    /// Generator, e.g. `zigzag-lift:p=2,depth=3`.
    #[arg(long)]
    generate: Option<String>,
    /// Point count for `--generate`.
    #[arg(long, default_value_t = 64)]
    n: usize,
    /// `euclidean:d`, `heisenberg:n` or `abstract`.
    #[arg(long)]
    ambient: Option<String>,
    /// Snowflake exponent.
    #[arg(long)]
    s: Option<f64>,
    /// e.g. `beta[q=2]`, `kappa`, `iota[q=1]`; repeatable.
    #[arg(long = "coeff")]
    coeff: Vec<String>,
    /// Carleson exponents; repeatable.
    #[arg(long)]
    p: Vec<String>,
    /// Enlargement factors; repeatable.
    #[arg(long = "K")]
    k_factor: Vec<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    exact_cap: Option<usize>,
    #[arg(long)]
    mc_samples: Option<usize>,
    /// Report path; the per-cube CSV goes next to it.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl SpaceArgs {
    fn config(&self) -> CliResult<AnalysisConfig> {
        let mut cfg = match &self.config {
            Some(p) => AnalysisConfig::load(p)?,
            None => AnalysisConfig::new(Vec::new()),
        };
        if let Some(i) = &self.input {
            cfg.input = Some(i.clone());
            cfg.generate = None;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(g) = &self.generate {
            let kind: GeneratorKind = g.parse().map_err(|e: rectiflat_core::Error| CliError::Usage(e.to_string()))?;
            cfg.generate = Some(GeneratorSpec::new(kind, self.n, cfg.seed));
            cfg.input = None;
        }
        if let Some(a) = &self.ambient {
            cfg.ambient = Ambient::parse(a).map_err(|e| CliError::Usage(e.to_string()))?;
        }
        if let Some(s) = self.s {
            cfg.s = s;
        }
        if !self.coeff.is_empty() {
            cfg.coefficients = self.coeff.iter().map(|c| CoeffGrid::parse(c)).collect::<CliResult<_>>()?;
        }
        if cfg.coefficients.is_empty() {
            cfg.coefficients.push(CoeffGrid::parse("beta[q=2]")?);
        }
        if !self.p.is_empty() {
            let ps = self.p.iter().map(|p| parse_f64(p)).collect::<CliResult<Vec<_>>>()?;
            cfg.coefficients.iter_mut().for_each(|c| c.p = ps.clone());
        }
        if !self.k_factor.is_empty() {
            cfg.coefficients.iter_mut().for_each(|c| c.k_factor = self.k_factor.clone());
        }
        if let Some(c) = self.exact_cap {
            cfg.exact_cap = c;
        }
        if let Some(m) = self.mc_samples {
            cfg.mc_samples = m;
        }
        if let Some(o) = &self.out {
            cfg.out = Some(o.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn init_threads() -> CliResult<()> {
    if let Ok(v) = std::env::var("RECTIFLAT_THREADS") {
        let n: usize =
            v.trim().parse().map_err(|_| CliError::Usage(format!("RECTIFLAT_THREADS=`{v}` is not a count")))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Usage(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    init_threads()?;
    match cli.command {
        Command::Analyze(args) => {
            let cfg = args.config()?;
            let report = cmd_analyze(&cfg)?;
            emit(&to_json(&report)?, cfg.out.as_deref())?;
            if let Some(out) = &cfg.out {
                emit(&cubes_csv(&report), Some(&out.with_extension("cubes.csv")))?;
            }
            let bad: Vec<_> = report.suites.iter().filter(|c| !c.passed()).map(|c| c.name.clone()).collect();
            if !bad.is_empty() {
                return Err(CliError::Invariant(format!("violated: {}", bad.join(", "))));
            }
        }
        Command::Embed(args) => {
            let cfg = args.config()?;
            let report = cmd_embed(&cfg)?;
            emit(&to_json(&report)?, cfg.out.as_deref())?;
        }
        Command::Verify { suite, seed, effort, out } => {
            if !(effort > 0.0 && effort.is_finite()) {
                return Err(CliError::Usage(format!("effort must be positive, got {effort}")));
            }
            let report = cmd_verify(&suite, &SuiteOptions { seed, effort })?;
            emit(&to_json(&report)?, out.as_deref())?;
            for c in &report.suite.checks {
                eprintln!(
                    "{} {} ({} cases, {} skipped)",
                    if c.passed() { "PASS" } else { "FAIL" },
                    c.name,
                    c.cases,
                    c.skipped
                );
            }
            let v = report.suite.violations();
            if v > 0 {
                return Err(CliError::Invariant(format!("{v} violations in suite `{suite}`")));
            }
        }
        Command::Generate { kind, n, seed, out } => {
            let kind: GeneratorKind =
                kind.parse().map_err(|e: rectiflat_core::Error| CliError::Usage(e.to_string()))?;
            let count = cmd_generate(&GeneratorSpec::new(kind, n, seed), &out)?;
            eprintln!("wrote {count} points to {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
