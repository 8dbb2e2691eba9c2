use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mr_qmem::full::{FullModelOptions, Propagation};
use mr_qmem::{
    discretize_waveguide, eta1, optimal_coupling, rect_comb_init, trajectory_expm, uniform_grid,
    FullModel, FullState, SystemParams,
};

fn params(n: usize) -> SystemParams {
    let base = SystemParams::new(n, 1.0, 0.1, 1.0, 1e4, 100.0).unwrap();
    let g = optimal_coupling(&base);
    SystemParams::new(n, 1.0, g, 1.0, 1e4, 100.0).unwrap()
}

fn reduced(c: &mut Criterion) {
    let mut group = c.benchmark_group("reduced_trajectory");
    for n in [7, 30, 100] {
        let p = params(n);
        let init = rect_comb_init(&p);
        let times = uniform_grid(p.echo_time() * 1.1, 2048).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| trajectory_expm(black_box(&init), &times, &p).unwrap())
        });
    }
    group.finish();
}

fn closed_form(c: &mut Criterion) {
    let p = params(30);
    let init = rect_comb_init(&p);
    let t = p.echo_time();
    c.bench_function("eta1_n30", |b| {
        b.iter(|| eta1(black_box(t), &init, &p).unwrap())
    });
}

fn full(c: &mut Criterion) {
    let mut group = c.benchmark_group("full_evolve");
    group.sample_size(10);
    let p = params(7);
    let grid = discretize_waveguide(&p, 256).unwrap();
    let init = FullState::from_resonators(&rect_comb_init(&p), &grid).unwrap();
    for (label, propagation) in [
        ("dense", Propagation::Dense),
        ("chebyshev", Propagation::Chebyshev),
    ] {
        let options = FullModelOptions {
            propagation,
            ..FullModelOptions::default()
        };
        let model = FullModel::new(grid.clone(), p, options).unwrap();
        group.bench_function(label, |b| {
            b.iter(|| model.evolve(black_box(&init), p.echo_time()).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, reduced, closed_form, full);
criterion_main!(benches);
