use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rectiflat_bench::{cantor, circle, perturbed_line};
use rectiflat_core::carleson::{carleson_report, Coefficient};
use rectiflat_core::{beta, build_dyadic, iota_estimate, kappa, IotaOptions, KappaOptions, PlaneSource};

fn coefficients(c: &mut Criterion) {
    let mut g = c.benchmark_group("coefficients");
    for n in [64, 256] {
        let sp = perturbed_line(n, 0);
        let all = sp.all();
        g.bench_with_input(BenchmarkId::new("beta_q2", n), &n, |b, _| {
            b.iter(|| beta(&sp, &all, 2.0, &PlaneSource::EuclideanFamily { k: 1 }).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("beta_q1", n), &n, |b, _| {
            b.iter(|| beta(&sp, &all, 1.0, &PlaneSource::EuclideanFamily { k: 1 }).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("kappa_exact", n), &n, |b, _| {
            b.iter(|| kappa(&sp, &all, &KappaOptions::default()).unwrap())
        });
    }
    let sp = perturbed_line(64, 0);
    let all = sp.all();
    g.bench_function("iota_bracket_64", |b| {
        b.iter(|| iota_estimate(&sp, &all, 1.0, 1, &IotaOptions::default()).unwrap())
    });
    let big = perturbed_line(1024, 0);
    let opts = KappaOptions { samples: 20_000, ..KappaOptions::default() };
    g.bench_function("kappa_monte_carlo_1024", |b| b.iter(|| kappa(&big, &big.all(), &opts).unwrap()));
    g.finish();
}

fn dyadic(c: &mut Criterion) {
    let mut g = c.benchmark_group("dyadic");
    g.sample_size(20);
    for d in [3, 4] {
        let sp = cantor(d);
        g.bench_with_input(BenchmarkId::new("build_cantor", d), &d, |b, _| b.iter(|| build_dyadic(black_box(&sp))));
    }
    let sp = circle(256);
    let sys = build_dyadic(&sp);
    g.bench_function("carleson_beta2_circle_256", |b| {
        b.iter(|| carleson_report(&sp, &sys, &Coefficient::Beta { q: 2.0, k: 1 }, 2.0, 2.0, false).unwrap())
    });
    g.finish();
}

criterion_group!(benches, coefficients, dyadic);
criterion_main!(benches);
