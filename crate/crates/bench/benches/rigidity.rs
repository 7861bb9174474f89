use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rigmaint_core::graph::{ObstacleSet, PositionMatrix};
use rigmaint_core::rigidity::{lambda7_gradient_analytic, rigidity_report};
use rigmaint_core::testkit::{random_framework, TestRng};
use rigmaint_core::{WeightField, WeightParams};
use std::hint::black_box;

fn report(c: &mut Criterion) {
    let mut group = c.benchmark_group("rigidity_report");
    for n in [6, 10, 20] {
        let wf = random_framework(&mut TestRng::new(n as u64), n, 0.6, true);
        group.bench_with_input(BenchmarkId::from_parameter(n), &wf, |b, wf| {
            b.iter(|| rigidity_report(black_box(wf)))
        });
    }
    group.finish();
}

fn gradient(c: &mut Criterion) {
    let mut group = c.benchmark_group("weighted_gradient");
    for n in [6, 12] {
        let mut rng = TestRng::new(7);
        let rows: Vec<[f64; 3]> = (0..n).map(|_| rng.point(4.0)).collect();
        let pos = PositionMatrix::from_rows(&rows).unwrap();
        let obs = ObstacleSet::new(vec![rng.vector(4.0), rng.vector(4.0)]).unwrap();
        let graph = rigmaint_core::Graph::complete(n).unwrap();
        let p = WeightParams::default();
        group.bench_function(BenchmarkId::from_parameter(n), |b| {
            b.iter(|| {
                let field = WeightField::compute(&graph, &pos, &obs, &p);
                let wf = field.framework(&graph, &pos).unwrap();
                let r = rigidity_report(&wf);
                lambda7_gradient_analytic(&wf, &r.eigvec7, &field)
            })
        });
    }
    group.finish();
}

criterion_group!(benches, report, gradient);
criterion_main!(benches);
