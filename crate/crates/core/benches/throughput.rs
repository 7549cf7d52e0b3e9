//! Rayon pool versus a single-thread pool on the parallel hot paths.
//!
//! Build with `--no-default-features` to time the sequential fallback itself.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use glassy_decay::decay::{sweep_eta, CheckSettings};
use glassy_decay::energy::energy_series_fast;
use glassy_decay::{simulate, simulate_direct, InitialData, PronyKernel, SpectralOperator, Strictness, TimeGrid};
use rayon::ThreadPool;
use std::hint::black_box;

fn pools() -> Vec<(String, ThreadPool)> {
    let threads = rayon::current_num_threads();
    [("sequential".to_string(), 1), (format!("rayon-{threads}"), threads)]
        .into_iter()
        .map(|(label, n)| (label, rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap()))
        .collect()
}

fn setup(modes: usize) -> (SpectralOperator, PronyKernel, InitialData) {
    let op = SpectralOperator::dirichlet_laplacian_1d(std::f64::consts::PI, modes).unwrap();
    let kernel = PronyKernel::new([(0.5, 1.0), (1.5, 3.0)], Strictness::Glassy).unwrap();
    let init = InitialData::random(&op, 7);
    (op, kernel, init)
}

fn bench_simulate(c: &mut Criterion) {
    let (op, kernel, init) = setup(64);
    let grid = TimeGrid::new(2.0, 1e-3).unwrap();
    let mut group = c.benchmark_group("simulate_fast_64_modes");
    for (label, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(&label), |b| {
            b.iter(|| pool.install(|| black_box(simulate(&op, &kernel, &init, grid).unwrap())))
        });
    }
    group.finish();

    let grid = TimeGrid::new(0.5, 1e-3).unwrap();
    let mut group = c.benchmark_group("simulate_direct_64_modes");
    group.sample_size(10);
    for (label, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(&label), |b| {
            b.iter(|| pool.install(|| black_box(simulate_direct(&op, &kernel, &init, grid).unwrap())))
        });
    }
    group.finish();
}

fn bench_energy(c: &mut Criterion) {
    let (op, kernel, init) = setup(64);
    let traj = simulate(&op, &kernel, &init, TimeGrid::new(2.0, 1e-3).unwrap()).unwrap();
    let mut group = c.benchmark_group("energy_series_64_modes");
    for (label, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(&label), |b| {
            b.iter(|| pool.install(|| black_box(energy_series_fast(&kernel, &traj).unwrap())))
        });
    }
    group.finish();
}

fn bench_sweep(c: &mut Criterion) {
    let (op, kernel, init) = setup(4);
    let grid = TimeGrid::new(20.0, 1e-2).unwrap();
    let etas = [0.5, 1.0, 2.0, 4.0, 8.0, 16.0];
    let settings = CheckSettings::default();
    let mut group = c.benchmark_group("sweep_6_points");
    group.sample_size(10);
    for (label, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(&label), |b| {
            b.iter(|| pool.install(|| black_box(sweep_eta(&kernel, &etas, &op, &init, grid, &settings))))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_simulate, bench_energy, bench_sweep);
criterion_main!(benches);
