//! Sequential vs parallel execution of the hot loops: the velocity table, the
//! MVB rows, and a sweep of random observables.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lightcone::dispersion::{log_grid, VelocityTable};
use lightcone::lattice::build_hamiltonian;
use lightcone::{
    certify_lrb, certify_mvb, CertificationConfig, DispersionRelation, Execution, LatticeBox, Observable, Potential,
    Region, Symbol, VelocityOptions,
};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn velocity_table(c: &mut Criterion) {
    let disp = DispersionRelation::closed_form(2, Symbol::DiscreteLaplacian, f64::INFINITY).unwrap();
    let grid = log_grid(0.05, 4.0, 32);
    let mut group = c.benchmark_group("velocity_table_2d");
    group.sample_size(10);
    for (name, mode) in MODES {
        let opts = VelocityOptions { execution: mode, ..VelocityOptions::default() };
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| VelocityTable::compute(&disp, &grid, &opts).unwrap())
        });
    }
    group.finish();
}

fn mvb_rows(c: &mut Criterion) {
    let lattice = LatticeBox::centered_chain(801).unwrap();
    let h = build_hamiltonian(&DispersionRelation::nearest_neighbor_chain(), &Potential::Zero, &lattice).unwrap();
    let x = Region::interval("X", &lattice, -400, -20).unwrap();
    let y = Region::interval("Y", &lattice, 20, 400).unwrap();
    let times: Vec<f64> = (1..=10).map(f64::from).collect();
    let mut group = c.benchmark_group("mvb_rows");
    group.sample_size(10);
    for (name, mode) in MODES {
        let cfg = CertificationConfig::default().with_times(times.clone()).with_execution(mode);
        group.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| certify_mvb(&h, &x, &y, &cfg).unwrap()));
    }
    group.finish();
}

fn seed_sweep(c: &mut Criterion) {
    let lattice = LatticeBox::centered_chain(161).unwrap();
    let h = build_hamiltonian(&DispersionRelation::nearest_neighbor_chain(), &Potential::Zero, &lattice).unwrap();
    let x = Region::interval("X", &lattice, -80, -25).unwrap();
    let y = Region::interval("Y", &lattice, 25, 80).unwrap();
    let pairs: Vec<(Observable, Observable)> = (0..4u64)
        .map(|s| {
            (
                Observable::random_localized(&x, h.dim(), 2 * s).unwrap(),
                Observable::random_localized(&y, h.dim(), 2 * s + 1).unwrap(),
            )
        })
        .collect();
    let mut group = c.benchmark_group("lrb_seed_sweep");
    group.sample_size(10);
    for (name, mode) in MODES {
        let cfg = CertificationConfig::default().with_times(vec![2.0, 4.0, 6.0]).with_execution(mode);
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| mode.map(&pairs, |(a, bo)| certify_lrb(&h, a, bo, &cfg).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, velocity_table, mvb_rows, seed_sweep);
criterion_main!(benches);
