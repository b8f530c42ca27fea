use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lattice_hydro::{
    build_nearest_neighbor, evolve, gibbs_spectral, propagate_covariance, sample_field, wigner_exact, LatticeBox, ScaledQuery,
    TemperatureProfile, WignerQuery,
};

fn chain_setup() -> (lattice_hydro::InteractionMatrix, lattice_hydro::CovarianceProfile) {
    let v = build_nearest_neighbor(1, &[1.0], &[1.0]).unwrap();
    let p = gibbs_spectral(&v, 1.0).unwrap().with_temperature(TemperatureProfile::GaussianBump { amplitude: 0.5, width: 1.0 }).unwrap();
    (v, p)
}

fn bench_evolve(c: &mut Criterion) {
    let (v, p) = chain_setup();
    let mut group = c.benchmark_group("evolve");
    for l in [256, 4096] {
        let x0 = sample_field(&p, 0.05, &LatticeBox::cube(1, l).unwrap(), 3).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(l), &x0, |b, x0| b.iter(|| evolve(&v, black_box(x0), 20.0).unwrap()));
    }
    group.finish();
}

fn bench_propagate(c: &mut Criterion) {
    let (v, p) = chain_setup();
    let offsets: Vec<(Vec<i64>, Vec<i64>)> = (-2..=2).flat_map(|z| (-2..=2).map(move |zp| (vec![z], vec![zp]))).collect();
    let mut group = c.benchmark_group("propagate_covariance");
    for eps in [0.1, 0.025] {
        let q = ScaledQuery::new(1.0, 1.0, vec![0.5], offsets.clone(), eps).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(eps), &q, |b, q| b.iter(|| propagate_covariance(&v, &p, black_box(q)).unwrap()));
    }
    group.finish();
}

fn bench_wigner(c: &mut Criterion) {
    let (v, p) = chain_setup();
    let q = WignerQuery::new(0.05, 1.0, vec![0.0], vec![vec![0.5], vec![1.5], vec![2.5]]);
    c.bench_function("wigner_exact", |b| b.iter(|| wigner_exact(&v, &p, black_box(&q)).unwrap()));
}

criterion_group!(benches, bench_evolve, bench_propagate, bench_wigner);
criterion_main!(benches);
