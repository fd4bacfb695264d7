use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use twomode_core::spectrum::eigensystem;
use twomode_core::{
    build_hamiltonian, eigenvalues, grand_partition, mu_of_lambda_d, xi12_quadrature, DirectSource,
    ModelParams, SumControl,
};

fn sector_eigenvalues(c: &mut Criterion) {
    let mut g = c.benchmark_group("eigenvalues");
    for m in [100usize, 1000, 5000] {
        let h = build_hamiltonian(m, 1.5);
        g.bench_with_input(BenchmarkId::from_parameter(m), &h, |b, h| {
            b.iter(|| eigenvalues(black_box(h)).unwrap())
        });
    }
    g.finish();
    let h = build_hamiltonian(200, 1.5);
    c.bench_function("eigensystem/200", |b| b.iter(|| eigensystem(black_box(&h)).unwrap()));
}

fn partition_sum(c: &mut Criterion) {
    let mut g = c.benchmark_group("grand_partition");
    g.sample_size(10);
    for (ld, d) in [(1.5, 0.1), (0.5, 0.1)] {
        let mu = mu_of_lambda_d(ld).unwrap().mu;
        let p = ModelParams::new(ld - d, 1.0, mu);
        g.bench_function(format!("lambda_d={ld}, d={d}"), |b| {
            b.iter(|| grand_partition(black_box(&p), &SumControl::default(), &DirectSource).unwrap())
        });
    }
    g.finish();
}

fn quadrature(c: &mut Criterion) {
    let mut g = c.benchmark_group("xi12_quadrature");
    g.sample_size(10);
    let mu = mu_of_lambda_d(1.5).unwrap().mu;
    g.bench_function("lambda=1.2, lambda_d=1.5", |b| {
        b.iter(|| xi12_quadrature(black_box(1.2), 1.0, mu).unwrap())
    });
    g.finish();
}

criterion_group!(benches, sector_eigenvalues, partition_sum, quadrature);
criterion_main!(benches);
