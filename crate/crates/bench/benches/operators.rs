use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pdirac_bench::{energy, field, operator};
use pdirac_core::eigen::{min_eigen, EigenConfig};
use std::hint::black_box;

fn apply(c: &mut Criterion) {
    let mut g = c.benchmark_group("apply_d");
    for (m, n) in [(2, 32), (3, 8), (3, 16)] {
        let op = operator(m, n);
        let f = field(&op, 1);
        g.bench_with_input(BenchmarkId::from_parameter(format!("m{m}_n{n}")), &f, |b, f| b.iter(|| op.apply_d(black_box(f)).unwrap()));
    }
    g.finish();

    let mut g = c.benchmark_group("apply_dp");
    let op = operator(3, 8);
    let f = field(&op, 2);
    for p in [1.5, 2.0, 3.0] {
        g.bench_with_input(BenchmarkId::from_parameter(p), &p, |b, &p| b.iter(|| op.apply_dp(black_box(&f), p, 1e-8).unwrap()));
    }
    g.finish();
}

fn energy_gradient(c: &mut Criterion) {
    let op = operator(3, 8);
    let f = field(&op, 3);
    let mut g = c.benchmark_group("energy_value_and_gradient");
    for p in [1.5, 2.0] {
        let e = energy(&op, p);
        g.bench_with_input(BenchmarkId::from_parameter(p), &e, |b, e| b.iter(|| e.value_and_gradient(black_box(&f)).unwrap()));
    }
    g.finish();
}

fn spectrum_and_eigen(c: &mut Criterion) {
    let op = operator(3, 8);
    c.bench_function("dirac_spectrum_64", |b| b.iter(|| op.dirac_spectrum(black_box(64)).unwrap()));
    let small = operator(2, 8);
    let cfg = EigenConfig { restarts: 1, ..EigenConfig::with_p(1.5) };
    let mut g = c.benchmark_group("min_eigen");
    g.sample_size(10);
    g.bench_function("t2_n8_p1.5", |b| b.iter(|| min_eigen(&small, black_box(&cfg)).unwrap()));
    g.finish();
}

criterion_group!(benches, apply, energy_gradient, spectrum_and_eigen);
criterion_main!(benches);
