use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fsb_core::basis::GridTransform;
use fsb_core::noise::generate_ou_path;
use fsb_core::nonlinearity::NonlinearTerm;
use fsb_core::norms::norm_c_delta;
use fsb_core::solver::solve_fully_discrete;
use fsb_core::{FracParams, NoiseSpec, Polynomial, SolveConfig};
use std::hint::black_box;

fn field(n: usize) -> Vec<f64> {
    (1..=n).map(|k| (k as f64 * 0.7).sin() / k as f64).collect()
}

fn transforms(c: &mut Criterion) {
    let mut group = c.benchmark_group("transforms");
    for n in [64usize, 256, 1024] {
        let g = 4 * n + 1;
        let mut t = GridTransform::new(n, g).unwrap();
        let coeffs = field(n);
        let mut grid = vec![0.0; g];
        let mut back = vec![0.0; n];
        group.bench_with_input(BenchmarkId::new("synthesize", n), &n, |b, _| {
            b.iter(|| t.synthesize_into(black_box(&coeffs), &mut grid).unwrap())
        });
        t.synthesize_into(&coeffs, &mut grid).unwrap();
        group.bench_with_input(BenchmarkId::new("analyze_sine", n), &n, |b, _| {
            b.iter(|| t.analyze_sine_into(black_box(&grid), &mut back).unwrap())
        });
    }
    group.finish();
}

fn drift(c: &mut Criterion) {
    let mut group = c.benchmark_group("apply_f");
    for (name, coeffs) in [("burgers", vec![0.0, 0.0, 1.0]), ("cubic", vec![0.0, 0.5, 0.0, 1.0])] {
        for n in [64usize, 256] {
            let poly = Polynomial::new(coeffs.clone()).unwrap();
            let g = poly.alias_free_grid(n);
            let mut term = NonlinearTerm::new(poly, n, g).unwrap();
            let u = field(n);
            let mut out = vec![0.0; n];
            group.bench_with_input(BenchmarkId::new(name, n), &n, |b, _| {
                b.iter(|| term.apply(black_box(&u), &mut out).unwrap())
            });
        }
    }
    group.finish();
}

fn holder_norm(c: &mut Criterion) {
    let n = 256;
    let mut t = GridTransform::new(n, 1025).unwrap();
    let g = t.synthesize(&fsb_core::SpectralField::new(field(n))).unwrap();
    c.bench_function("norm_c_delta/G=1025", |b| {
        b.iter(|| norm_c_delta(black_box(&g), 0.1, 64).unwrap())
    });
}

fn noise(c: &mut Criterion) {
    let p = FracParams::new(1.9).unwrap();
    let spec = NoiseSpec::new(1, 64, 1024, 0.5).unwrap();
    c.bench_function("generate_ou_path/N=64,M=1024", |b| {
        b.iter(|| generate_ou_path(black_box(&spec), p, 1024).unwrap())
    });
}

fn solve(c: &mut Criterion) {
    let mut cfg = SolveConfig::burgers_default(1).with_modes(64);
    cfg.noise.base_steps = 1024;
    cfg = cfg.with_steps(1024);
    cfg.diag_stride = 64;
    let mut group = c.benchmark_group("solve");
    group.sample_size(10);
    group.bench_function("burgers/N=64,M=1024", |b| {
        b.iter(|| solve_fully_discrete(black_box(&cfg)).unwrap())
    });
    group.finish();
}

criterion_group!(benches, transforms, drift, holder_norm, noise, solve);
criterion_main!(benches);
