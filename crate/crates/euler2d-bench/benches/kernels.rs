use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use euler2d::{
    advection_apply, cayley_step, estimate_density, euler_drift, poisson_invert, rk4_step,
    BoundaryFunction, DomainSpec,
};
use euler2d_bench::{random_grid_field, random_spectral_state};

fn bench_spectral(c: &mut Criterion) {
    let mut group = c.benchmark_group("spectral");
    for n in [4u32, 8, 12] {
        let state = random_spectral_state(n, 1);
        group.bench_with_input(BenchmarkId::new("euler_drift", n), &state, |b, s| {
            b.iter(|| euler_drift(black_box(s)))
        });
        group.bench_with_input(BenchmarkId::new("rk4_step", n), &state, |b, s| {
            b.iter(|| rk4_step(black_box(s), 1e-4))
        });
    }
    group.finish();
}

fn bench_grid(c: &mut Criterion) {
    let mut group = c.benchmark_group("grid");
    for n in [32usize, 64] {
        let psi = random_grid_field(n, 2);
        let omega = random_grid_field(n, 3);
        group.bench_with_input(BenchmarkId::new("advection_apply", n), &n, |b, _| {
            b.iter(|| advection_apply(black_box(&psi), black_box(&omega)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("poisson_invert", n), &n, |b, _| {
            b.iter(|| poisson_invert(black_box(&omega)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("cayley_step", n), &n, |b, _| {
            b.iter(|| cayley_step(black_box(&omega), 1e-3).unwrap())
        });
    }
    group.finish();
}

fn bench_density(c: &mut Criterion) {
    let domain = DomainSpec::Ball { radius: 1.0, dim: 2 };
    let boundary = BoundaryFunction::Coordinate(0);
    let drift = |_: &[f64], b: &mut [f64]| b.fill(0.0);
    c.bench_function("density/exit_time_1000_paths", |b| {
        b.iter(|| {
            estimate_density(
                &drift,
                1.0,
                black_box(&domain),
                &boundary,
                &[0.5, 0.0],
                1000,
                1e-3,
                9,
            )
            .unwrap()
        })
    });
}

criterion_group!(benches, bench_spectral, bench_grid, bench_density);
criterion_main!(benches);
