//! Acceptance criteria, one pass/fail line each. Runs without the libtest
//! harness so the lines are always printed; exits nonzero if any fails.

use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rectiflat_cli::{cmd_analyze, to_json, AnalysisConfig, CoeffGrid, CoeffKind};
use rectiflat_core::carleson::{carleson_report, Coefficient};
use rectiflat_core::coeffs::{beta, kappa, KappaOptions, PlaneSource};
use rectiflat_core::suites::{self, Check, SuiteOptions, SuiteReport, SUITES};
use rectiflat_core::{build_dyadic, generate, GeneratorKind, GeneratorSpec};

const SEED: u64 = 0;

struct Verdict {
    id: &'static str,
    pass: bool,
    detail: String,
    elapsed: Duration,
}

fn pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap()
}

/// Full-effort suite reports on an 8-thread pool, shared by criteria 1, 4, 5.
fn reports() -> &'static [(String, SuiteReport, String)] {
    static CELL: OnceLock<Vec<(String, SuiteReport, String)>> = OnceLock::new();
    CELL.get_or_init(|| {
        let p = pool(8);
        SUITES
            .iter()
            .map(|&s| {
                let r = p.install(|| suites::run_suite(s, &SuiteOptions { seed: SEED, effort: 1.0 })).unwrap();
                let json = serde_json::to_string(&r).unwrap();
                (s.to_string(), r, json)
            })
            .collect()
    })
}

fn suite_checks(suite: &str) -> &'static [Check] {
    &reports().iter().find(|(s, ..)| s == suite).unwrap().1.checks
}

fn find(suite: &str, prefix: &str) -> Vec<&'static Check> {
    let v: Vec<_> = suite_checks(suite).iter().filter(|c| c.name.starts_with(prefix)).collect();
    assert!(!v.is_empty(), "no check `{prefix}` in suite `{suite}`");
    v
}

fn describe(checks: &[&Check]) -> String {
    checks
        .iter()
        .map(|c| {
            let mut s = format!("{}: {} cases, {} violations", c.name, c.cases, c.violations);
            if let Some(f) = &c.first_failure {
                s += &format!(" (first: {f})");
            }
            s
        })
        .collect::<Vec<_>>()
        .join("; ")
}

/// Zero violations, and at least `min_cases` admissible cases in each check.
fn checks_verdict(id: &'static str, checks: Vec<&Check>, min_cases: usize, start: Instant) -> Verdict {
    let pass = checks.iter().all(|c| c.violations == 0 && c.cases >= min_cases);
    Verdict { id, pass, detail: describe(&checks), elapsed: start.elapsed() }
}

fn criterion_1() -> Vec<Verdict> {
    let t = Instant::now();
    reports();
    let suite_time = t.elapsed();
    let mut out = vec![
        checks_verdict("1a ι_plane ≤ 2β", find("planes", "ι_plane ≤ 2β"), 1, t),
        checks_verdict("1b κ ≤ 3ι", find("planes", "κ ≤ 3·ι"), 1, t),
        checks_verdict("1c quantified Menger", find("menger", "quantified Menger"), 200, t),
        checks_verdict("1d four-point dichotomy", find("menger", "four-point dichotomy"), 10_000, t),
        checks_verdict("1e Euclidean Pythagoras", find("planes", "two-plane Pythagoras"), 10_000, t),
        checks_verdict("1f dyadic properties", find("dyadic", "dyadic properties"), 50, t),
    ];
    let heis: Vec<&Check> = [
        "Korányi triangle inequality",
        "left invariance",
        "projection equivariance",
        "on-plane isometry",
        "distance-to-plane sandwich",
    ]
    .iter()
    .flat_map(|n| find("heisenberg", n))
    .collect();
    out.push(checks_verdict("1g Heisenberg invariants", heis, 1, t));
    let limit = Duration::from_secs(120);
    for v in &mut out {
        v.elapsed = suite_time;
        if suite_time > limit {
            v.pass = false;
            v.detail += &format!("; over the {limit:?} budget");
        }
    }
    out
}

fn criterion_2() -> Verdict {
    let t = Instant::now();
    let mut pass = true;
    let mut rows = Vec::new();
    let mut normalized = Vec::new();
    let mut logs = Vec::new();
    for j in 3..=8 {
        let eps = 2f64.powi(-j);
        let sp = generate(&GeneratorSpec::new(GeneratorKind::ParallelLines { eps, r: 1.0 }, 512, SEED)).unwrap();
        let all = sp.all();
        for q in [1.0, 2.0] {
            let b = beta(&sp, &all, q, &PlaneSource::EuclideanFamily { k: 1 }).unwrap().raw;
            if !(eps / 4.0..=4.0 * eps).contains(&b) {
                pass = false;
                rows.push(format!("β_{q}({eps}) = {b} outside [ε/4, 4ε]"));
            }
        }
        let lower = kappa(&sp, &all, &KappaOptions::default()).unwrap().raw / 3.0;
        let stripped = lower / -eps.ln();
        normalized.push(stripped / (eps * eps));
        logs.push(((1.0 / eps).ln(), stripped.ln()));
    }
    for w in normalized.windows(2) {
        let r = w[1] / w[0];
        if !(0.25..=4.0).contains(&r) {
            pass = false;
            rows.push(format!("consecutive ratio {r}"));
        }
    }
    // least-squares slope of log(κ/3 / (−log ε)) against log(1/ε)
    let n = logs.len() as f64;
    let (mx, my) = (logs.iter().map(|p| p.0).sum::<f64>() / n, logs.iter().map(|p| p.1).sum::<f64>() / n);
    let slope = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / logs.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    if !(-2.4..=-1.6).contains(&slope) {
        pass = false;
    }
    let elapsed = t.elapsed();
    if elapsed > Duration::from_secs(60) {
        pass = false;
        rows.push("over the 60s budget".into());
    }
    rows.insert(0, format!("slope {slope:.3}, κ/3 ÷ (−log ε)ε² = {normalized:.3?}"));
    Verdict { id: "2 parallel-lines anchor", pass, detail: rows.join("; "), elapsed }
}

/// `β₂` of a generation square's four corner children, relative to its
/// diameter: the children's centers sit at `(±3s/8, ±3s/8)`, so every line
/// leaves a mean square distance of at least `(3s/8)²`, against a diameter of
/// at most `s√2`. Each added depth adds a level of such cubes, and at least
/// half the mass of that level sees the configuration, giving the increment.
fn cantor_increment() -> f64 {
    let b = 3.0 / (8.0 * 2f64.sqrt());
    b * b / 2.0
}

fn criterion_3() -> Verdict {
    let t = Instant::now();
    let mut pass = true;
    let mut notes = Vec::new();

    let opts = KappaOptions::default();
    let grid = [
        Coefficient::Beta { q: 1.0, k: 1 },
        Coefficient::Beta { q: 2.0, k: 1 },
        Coefficient::Beta { q: f64::INFINITY, k: 1 },
        Coefficient::Kappa { options: opts },
        Coefficient::IotaPlane { q: 1.0, k: 1 },
    ];
    let pk = [(1.0, 1.0), (2.0, 2.0), (1.0, 3.0), (0.5, 2.0)];
    let collinear = [
        generate(&GeneratorSpec::new(GeneratorKind::Line, 64, SEED)).unwrap(),
        generate(&GeneratorSpec::new(GeneratorKind::Line, 200, SEED)).unwrap(),
    ];
    let mut nonzero = 0;
    for sp in &collinear {
        let sys = build_dyadic(sp);
        for c in &grid {
            for &(p, k) in &pk {
                if carleson_report(sp, &sys, c, p, k, false).unwrap().constant != 0.0 {
                    nonzero += 1;
                }
            }
        }
    }
    pass &= nonzero == 0;
    notes.push(format!("collinear nonzero constants {nonzero}"));

    let inc = cantor_increment();
    let mut sums = Vec::new();
    for depth in 2..=5 {
        let sp = generate(&GeneratorSpec::new(GeneratorKind::Cantor4 { depth }, 0, SEED)).unwrap();
        let sys = build_dyadic(&sp);
        let r = carleson_report(&sp, &sys, &Coefficient::Beta { q: 2.0, k: 1 }, 2.0, 2.0, false).unwrap();
        let root = sys.levels[0][0];
        sums.push(r.per_root[root]);
    }
    let grows = sums.windows(2).all(|w| w[1] - w[0] >= inc);
    pass &= grows;
    notes.push(format!("cantor root sums {sums:.4?} vs increment {inc:.4}"));

    let mut worst: f64 = 1.0;
    let circles: Vec<_> = [64, 128, 256]
        .iter()
        .map(|&n| {
            let sp = generate(&GeneratorSpec::new(GeneratorKind::Circle, n, SEED)).unwrap();
            let sys = build_dyadic(&sp);
            (sp, sys)
        })
        .collect();
    for c in &grid {
        for &(p, k) in &pk {
            let consts: Vec<f64> =
                circles.iter().map(|(sp, sys)| carleson_report(sp, sys, c, p, k, false).unwrap().constant).collect();
            for w in consts.windows(2) {
                let r = (w[1] / w[0]).max(w[0] / w[1]);
                worst = worst.max(if r.is_finite() { r } else { f64::INFINITY });
            }
        }
    }
    pass &= worst <= 2.0;
    notes.push(format!("circle worst ratio under n → 2n {worst:.3}"));

    let elapsed = t.elapsed();
    if elapsed > Duration::from_secs(180) {
        pass = false;
        notes.push("over the 180s budget".into());
    }
    Verdict { id: "3 Carleson discrimination", pass, detail: notes.join("; "), elapsed }
}

fn criterion_4() -> Verdict {
    let t = Instant::now();
    let count = 2_000;
    let cal = suites::calibrate(SEED, count);
    let checks = suites::holdout(&cal, SEED, count);
    let pass = checks.iter().all(|c| c.violations == 0 && c.cases > 0);
    let refs: Vec<&Check> = checks.iter().collect();
    let elapsed = t.elapsed();
    let mut detail = format!("{cal:?}; {}", describe(&refs));
    if elapsed > Duration::from_secs(300) {
        detail += "; over the 300s budget";
    }
    Verdict { id: "4 calibration then holdout", pass: pass && elapsed <= Duration::from_secs(300), detail, elapsed }
}

fn criterion_5() -> Verdict {
    let t = Instant::now();
    let single = pool(1);
    let mut differing = Vec::new();
    for (name, _, json8) in reports() {
        let r = single.install(|| suites::run_suite(name, &SuiteOptions { seed: SEED, effort: 1.0 })).unwrap();
        if serde_json::to_string(&r).unwrap() != *json8 {
            differing.push(name.clone());
        }
    }
    let mut cfg = AnalysisConfig::new(
        [CoeffKind::Beta, CoeffKind::Kappa, CoeffKind::Iota, CoeffKind::IotaPlane]
            .into_iter()
            .map(CoeffGrid::new)
            .collect(),
    );
    cfg.generate = Some(GeneratorSpec::new(GeneratorKind::PerturbedLine { noise: 0.05 }, 300, 7));
    let a = pool(1).install(|| to_json(&cmd_analyze(&cfg).unwrap()).unwrap());
    let b = pool(8).install(|| to_json(&cmd_analyze(&cfg).unwrap()).unwrap());
    if a != b {
        differing.push("analyze report".into());
    }
    let detail = if differing.is_empty() {
        format!("{} suite reports and an analyze report identical at 1 and 8 threads", SUITES.len())
    } else {
        format!("differs: {}", differing.join(", "))
    };
    Verdict { id: "5 determinism", pass: differing.is_empty(), detail, elapsed: t.elapsed() }
}

fn main() -> ExitCode {
    // libtest flags such as --nocapture or a name filter are accepted and ignored
    let mut verdicts = criterion_1();
    verdicts.push(criterion_2());
    verdicts.push(criterion_3());
    verdicts.push(criterion_4());
    verdicts.push(criterion_5());
    let mut failed = 0;
    for v in &verdicts {
        println!("{} criterion {} [{:.1?}]: {}", if v.pass { "PASS" } else { "FAIL" }, v.id, v.elapsed, v.detail);
        failed += usize::from(!v.pass);
    }
    println!("acceptance: {} passed, {failed} failed", verdicts.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
