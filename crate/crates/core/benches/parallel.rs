use std::hint::black_box;

use bospec::discretization::{assemble_hamiltonian, build_grid, GridOperator};
use bospec::eigensolver::lowest_eigenpairs;
use bospec::par;
use bospec::potential::Potential;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn oscillator(points: usize) -> GridOperator {
    let grid = build_grid(1, 1, &[8.0, 8.0], &[points, points]).unwrap();
    assemble_hamiltonian(&grid, &Potential::radial_square(1, 1), 0.5).unwrap()
}

fn matvec(c: &mut Criterion) {
    let mut group = c.benchmark_group("matvec");
    for points in [127, 511] {
        let op = oscillator(points);
        let x: Vec<f64> = (0..op.dim()).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut y = vec![0.0; op.dim()];
        group.bench_with_input(BenchmarkId::new("sequential", points), &points, |b, _| {
            b.iter(|| op.matrix.mul_vec_into_seq(black_box(&x), &mut y))
        });
        group.bench_with_input(BenchmarkId::new("parallel", points), &points, |b, _| {
            b.iter(|| op.matrix.mul_vec_into(black_box(&x), &mut y))
        });
    }
    group.finish();
}

fn reductions(c: &mut Criterion) {
    let mut group = c.benchmark_group("dot");
    for len in [1 << 14, 1 << 20] {
        let a: Vec<f64> = (0..len).map(|i| (i as f64).cos()).collect();
        let b: Vec<f64> = (0..len).map(|i| (i as f64 * 0.5).sin()).collect();
        group.bench_with_input(BenchmarkId::new("sequential", len), &len, |bench, _| {
            bench.iter(|| par::dot_serial(black_box(&a), black_box(&b)))
        });
        group.bench_with_input(BenchmarkId::new("chunked", len), &len, |bench, _| {
            bench.iter(|| par::dot(black_box(&a), black_box(&b)))
        });
    }
    group.finish();
}

fn assembly_and_solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("pipeline");
    group.sample_size(10);
    group.bench_function("assemble_511x511", |b| {
        b.iter(|| oscillator(black_box(511)))
    });
    let op = oscillator(127);
    group.bench_function("lowest_6_of_127x127", |b| {
        b.iter(|| lowest_eigenpairs(&op, 6, 1e-8, 100_000, 0).unwrap())
    });
    group.finish();
}

criterion_group!(benches, matvec, reductions, assembly_and_solve);
criterion_main!(benches);
