use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use relperturb::generators::{self, fgn, CoeffFamily, GeneratorConfig, Setting};
use relperturb::rng::{self, role};
use relperturb::{eigenvalue_expansion, estimation, projector_expansion, Perturbation};
use relperturb_bench::{power_model, relative_perturbation};

fn spectral(c: &mut Criterion) {
    let mut g = c.benchmark_group("spectral");
    for d in [8usize, 32, 128] {
        let m = power_model(d, 1);
        g.bench_with_input(BenchmarkId::new("relative_rank_all", d), &m, |b, m| {
            b.iter(|| (0..m.dim()).map(|j| m.relative_rank(j).unwrap()).sum::<f64>())
        });
        g.bench_with_input(BenchmarkId::new("perturbation_new", d), &m, |b, m| {
            let e = relative_perturbation(m, 1e-3, 2).matrix().clone();
            b.iter(|| Perturbation::new(m, black_box(e.clone())).unwrap())
        });
        let p = relative_perturbation(&m, 1e-3, 2);
        g.bench_with_input(BenchmarkId::new("eigenvalue_expansion", d), &(&m, &p), |b, (m, p)| {
            b.iter(|| eigenvalue_expansion(m, p, 1).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("projector_expansion", d), &(&m, &p), |b, (m, p)| {
            b.iter(|| projector_expansion(m, p, 1, m.default_r0(1).unwrap()).unwrap())
        });
    }
    g.finish();
}

fn sampling(c: &mut Criterion) {
    let mut g = c.benchmark_group("sampling");
    let m = power_model(32, 3);
    let cfg = GeneratorConfig::new(Setting::Iid, 4000, m.clone(), CoeffFamily::Gaussian, 1);
    g.bench_function("covariance_from_rows_d32_n4000", |b| {
        b.iter(|| estimation::covariance_of(&generators::generate(&cfg, 0).unwrap().samples, false).unwrap())
    });
    g.bench_function("covariance_wishart_d32_n4000", |b| {
        b.iter(|| generators::gaussian_covariance_fast(&m, 4000, &mut rng::stream(1, 0, role::SAMPLES)).unwrap())
    });
    for n in [4096usize, 65536] {
        g.bench_with_input(BenchmarkId::new("fgn", n), &n, |b, &n| {
            b.iter(|| fgn(n, 0.8, &mut rng::stream(2, 0, role::VOLATILITY)).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, spectral, sampling);
criterion_main!(benches);
