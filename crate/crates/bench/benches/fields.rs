use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64;
use qcave::cave::{sample_cave, Axis, GridSpec};
use qcave::nodal::{circulation, refine_node, ContourSpec};
use qcave_bench::{plane_points, preset};
use std::hint::black_box;

fn field_sample(c: &mut Criterion) {
    let sup = preset("case1");
    let pts = plane_points(64);
    c.bench_function("sample_plane_64x64", |b| {
        b.iter(|| pts.iter().filter_map(|&z| sup.sample(z, black_box(5.0)).ok()).count())
    });
}

fn nodal(c: &mut Criterion) {
    let sup = preset("case1");
    let pair = qcave::SymmetricPair::from_superposition(&sup).unwrap();
    let seed = pair.node_position(0, 2.5).unwrap() + Complex64::new(0.01, 0.01);
    c.bench_function("refine_node", |b| b.iter(|| refine_node(&sup, black_box(seed), 2.5).unwrap()));
    let d = pair.node_spacing(2.5).unwrap();
    let mut group = c.benchmark_group("circulation");
    for n in [256usize, 1024] {
        let contour = ContourSpec::new(pair.node_position(0, 2.5).unwrap(), 0.3 * d, n).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &contour, |b, ct| {
            b.iter(|| circulation(&sup, ct, 2.5).unwrap())
        });
    }
    group.finish();
}

fn cave(c: &mut Criterion) {
    let sup = preset("case1");
    let spec = GridSpec {
        x: Axis::new(-4.0, 4.0, 81).unwrap(),
        y: Axis::new(-3.0, 3.0, 61).unwrap(),
        t: Axis::new(0.0, 10.0, 21).unwrap(),
        iso_psi: 0.053,
        iso_dpsi: 0.106,
    };
    c.bench_function("sample_cave_81x61x21", |b| b.iter(|| sample_cave(&sup, black_box(&spec)).unwrap()));
}

criterion_group!(benches, field_sample, nodal, cave);
criterion_main!(benches);
