use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use tide_bench::Fixture;
use tide_core::assembly::{assemble_velocity_block, build_preconditioner, build_system};
use tide_core::sparse::{factorize, FactorKind};
use tide_core::{gmres, CellKind, PreconditionerKind, SolverConfig};

const N: usize = 32;

fn assembly(c: &mut Criterion) {
    let f = Fixture::new(N, CellKind::Triangle, 0.01, PreconditionerKind::Riesz).unwrap();
    let mut g = c.benchmark_group("assembly");
    g.bench_function("block_system_tri_32", |b| {
        b.iter(|| build_system(black_box(&f.params), &f.v, &f.w).unwrap())
    });
    g.bench_function("riesz_velocity_block_tri_32", |b| {
        b.iter(|| {
            assemble_velocity_block(black_box(&f.params), &f.v, PreconditionerKind::Riesz).unwrap()
        })
    });
    g.finish();
}

fn factorization(c: &mut Criterion) {
    let f = Fixture::new(N, CellKind::Triangle, 0.01, PreconditionerKind::Riesz).unwrap();
    let mut g = c.benchmark_group("factorization");
    g.bench_function("cholesky_riesz_tri_32", |b| {
        b.iter(|| factorize(black_box(f.pc.pv()), FactorKind::SpdCholesky).unwrap())
    });
    g.bench_function("preconditioner_tri_32", |b| {
        b.iter(|| {
            build_preconditioner(black_box(&f.params), &f.v, &f.w, PreconditionerKind::Riesz)
                .unwrap()
        })
    });
    g.finish();
}

fn krylov(c: &mut Criterion) {
    let cfg = SolverConfig::default();
    let mut g = c.benchmark_group("gmres");
    for (name, kind) in [
        ("riesz", PreconditionerKind::Riesz),
        ("riesz_lite", PreconditionerKind::RieszLite),
    ] {
        let f = Fixture::new(N, CellKind::Triangle, 0.01, kind).unwrap();
        g.bench_function(format!("{name}_tri_32"), |b| {
            b.iter(|| gmres(&f.system, &f.pc, black_box(&f.rhs), None, &cfg).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, assembly, factorization, krylov);
criterion_main!(benches);
