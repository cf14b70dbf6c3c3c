use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use deform_core::generators::{half_circle, s_curve, spiral};
use deform_core::{
    build_neighbor_graph, compute_field, percentile_radius, step, FieldParams, IntegratorConfig, ManifoldState,
    PointCloud,
};

fn clouds() -> Vec<(&'static str, PointCloud, f64)> {
    let sc = s_curve(24, 15, 10.0).unwrap();
    let r = percentile_radius(&sc, 1.0, 2.0).unwrap();
    vec![
        ("half_circle_129", half_circle(69.0, 129).unwrap(), 3.36),
        ("spiral_600", spiral(600).unwrap(), 1.2),
        ("s_curve_360", sc, r),
    ]
}

fn field(c: &mut Criterion) {
    let params = FieldParams::default();
    let mut group = c.benchmark_group("compute_field");
    for (name, cloud, r) in clouds() {
        let graph = build_neighbor_graph(&cloud, r).unwrap();
        let state = ManifoldState::new(cloud);
        group.bench_function(name, |b| {
            b.iter(|| compute_field(black_box(&state), &graph, &params).unwrap())
        });
    }
    group.finish();
}

fn graph(c: &mut Criterion) {
    let mut group = c.benchmark_group("build_neighbor_graph");
    for (name, cloud, r) in clouds() {
        group.bench_function(name, |b| b.iter(|| build_neighbor_graph(black_box(&cloud), r).unwrap()));
    }
    group.finish();
}

fn euler_step(c: &mut Criterion) {
    let params = FieldParams::default();
    let config = IntegratorConfig::default();
    let cloud = spiral(600).unwrap();
    let graph = build_neighbor_graph(&cloud, 1.2).unwrap();
    let state = ManifoldState::new(cloud);
    c.bench_function("field_and_step/spiral_600", |b| {
        b.iter(|| {
            let f = compute_field(black_box(&state), &graph, &params).unwrap();
            step(&state, &f, &config, 1.2).unwrap()
        })
    });
}

criterion_group!(benches, field, graph, euler_step);
criterion_main!(benches);
