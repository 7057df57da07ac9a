use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use swsync_core::dynamics::{find_limit_cycle, CycleOptions};
use swsync_core::graph::{generate_small_world, laplacian};
use swsync_core::linalg::{symmetric_eigen, JacobiOptions};
use swsync_core::msf::{floquet, FLOQUET_STEPS};
use swsync_core::netsim::{perturbed_initials, simulate_network, SimOptions};
use swsync_core::spectral::exact_moments;
use swsync_core::triangle::fit_triangle;
use swsync_core::{Rossler, SmallWorldParams};

fn jacobi(c: &mut Criterion) {
    let mut group = c.benchmark_group("jacobi");
    group.sample_size(10);
    for n in [64, 128, 256] {
        let l = laplacian(&generate_small_world(&SmallWorldParams::new(n, 3, 4.0, 1)).unwrap());
        group.bench_with_input(BenchmarkId::from_parameter(n), &l, |b, l| {
            b.iter(|| symmetric_eigen(black_box(l), false, JacobiOptions::default()).unwrap())
        });
    }
    group.finish();
}

fn moments(c: &mut Criterion) {
    let g = generate_small_world(&SmallWorldParams::new(4096, 3, 4.0, 1)).unwrap();
    c.bench_function("exact_moments/4096", |b| b.iter(|| exact_moments(black_box(&g)).unwrap()));
    c.bench_function("generate/4096", |b| {
        b.iter(|| generate_small_world(black_box(&SmallWorldParams::new(4096, 3, 4.0, 1))).unwrap())
    });
}

fn fit(c: &mut Criterion) {
    c.bench_function("fit_triangle", |b| b.iter(|| fit_triangle(black_box(10.0), black_box(114.0), black_box(1431.0))));
}

fn floquet_bench(c: &mut Criterion) {
    let model = Rossler::reference();
    let cycle = find_limit_cycle(&model, &Rossler::REFERENCE_ANCHOR, CycleOptions::default()).unwrap();
    c.bench_function("floquet/sigma=1", |b| b.iter(|| floquet(&model, &cycle, black_box(1.0), FLOQUET_STEPS).unwrap()));
}

fn simulation(c: &mut Criterion) {
    let mut group = c.benchmark_group("simulate_100_steps");
    group.sample_size(10);
    let model = Rossler::reference();
    let opts = SimOptions { t_end: 1.0, ..SimOptions::default() };
    for n in [128, 512] {
        let g = generate_small_world(&SmallWorldParams::new(n, 3, 4.0, 1)).unwrap();
        let init = perturbed_initials(&Rossler::REFERENCE_ANCHOR, 0.1, n, 1);
        group.bench_with_input(BenchmarkId::from_parameter(n), &(g, init), |b, (g, init)| {
            b.iter(|| simulate_network(g, &model, 0.1, init, opts).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, jacobi, moments, fit, floquet_bench, simulation);
criterion_main!(benches);
