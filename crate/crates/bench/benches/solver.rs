use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use tot_bench::fixture;
use tot_core::{
    newton_direction, short_step_solve, solve_exact, start_point, SolverConfig, Variant,
};

fn newton(c: &mut Criterion) {
    let mut group = c.benchmark_group("newton_direction");
    for (d, n, variant) in [
        (2, 16, Variant::Marginal),
        (2, 24, Variant::Marginal),
        (3, 4, Variant::ModeSum),
    ] {
        let p = fixture(d, n, variant);
        let u = start_point(&p);
        group.bench_with_input(
            BenchmarkId::new(format!("{variant:?}"), format!("{d}x{n}")),
            &u,
            |b, u| b.iter(|| newton_direction(&p, black_box(u), 10.0).unwrap()),
        );
    }
    group.finish();
}

fn solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("short_step_solve");
    group.sample_size(10);
    for n in [4, 8] {
        let p = fixture(2, n, Variant::Marginal);
        let config = SolverConfig::new(1e-4);
        group.bench_with_input(BenchmarkId::from_parameter(n), &p, |b, p| {
            b.iter(|| short_step_solve(black_box(p), &config).unwrap())
        });
    }
    group.finish();
}

fn simplex(c: &mut Criterion) {
    let mut group = c.benchmark_group("simplex");
    for (d, n) in [(2, 8), (2, 16), (3, 4)] {
        let p = fixture(d, n, Variant::Marginal);
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("{d}x{n}")),
            &p,
            |b, p| b.iter(|| solve_exact(black_box(p)).unwrap()),
        );
    }
    group.finish();
}

criterion_group!(benches, newton, solve, simplex);
criterion_main!(benches);
