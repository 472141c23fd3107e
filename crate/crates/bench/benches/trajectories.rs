use criterion::{criterion_group, criterion_main, Criterion};
use num_complex::Complex64;
use qcave::trajectory::{integrate, isochrone, TrajectoryKind};
use qcave_bench::preset;
use std::hint::black_box;

fn single(c: &mut Criterion) {
    let sup = preset("case1");
    let z0 = Complex64::new(-9.11016, -1.17309);
    let mut group = c.benchmark_group("integrate_0_to_10");
    for tol in [1e-6, 1e-9] {
        group.bench_function(format!("tol_{tol:e}"), |b| {
            b.iter(|| integrate(&sup, TrajectoryKind::Quantum, black_box(z0), 0.0, 10.0, tol).unwrap())
        });
    }
    group.finish();
}

fn shooting(c: &mut Criterion) {
    let sup = preset("case1");
    let targets: Vec<f64> = (0..16).map(|k| -3.7 + 0.5 * k as f64).collect();
    let mut group = c.benchmark_group("isochrone");
    group.sample_size(10);
    group.bench_function("16_targets", |b| {
        b.iter(|| isochrone(&sup, TrajectoryKind::Quantum, black_box(&targets), 5.0, 0.0, 1e-9).unwrap())
    });
    group.finish();
}

criterion_group!(benches, single, shooting);
criterion_main!(benches);
