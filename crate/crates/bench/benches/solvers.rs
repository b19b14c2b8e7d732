use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fockopa_bench::{exact, poly, two_block_form, POLYS};
use fockopa_core::fockops::CAPACITY;
use fockopa_core::linearize::linearize;
use fockopa_core::opa::{decay_table, solve_dense, solve_opa};
use fockopa_core::sigma::{sigma_build, sigma_residual_norm_sq, ResidualMode};

fn opa_solvers(c: &mut Criterion) {
    let mut g = c.benchmark_group("opa");
    let f = poly("1 - x1*x2");
    for n in [4usize, 6, 8] {
        g.bench_with_input(BenchmarkId::new("recursive", n), &n, |b, &n| b.iter(|| solve_opa(black_box(&f), n).unwrap()));
        g.bench_with_input(BenchmarkId::new("dense", n), &n, |b, &n| {
            b.iter(|| solve_dense(black_box(&f), n, CAPACITY, None).unwrap())
        });
    }
    g.finish();
}

fn decay(c: &mut Criterion) {
    let f = poly("(1 - x1)*(1 - x2)");
    c.bench_function("decay_table (1-x1)(1-x2) n<=10", |b| b.iter(|| decay_table(black_box(&f), 10, (4, 10)).unwrap()));
}

fn linearization(c: &mut Criterion) {
    let mut g = c.benchmark_group("linearize");
    for text in POLYS {
        let f = exact(text);
        g.bench_function(text, |b| b.iter(|| linearize(black_box(&f)).unwrap()));
    }
    g.finish();
}

fn sigma(c: &mut Criterion) {
    let form = two_block_form();
    let mut g = c.benchmark_group("sigma");
    g.sample_size(20);
    for inner in [2u64, 6] {
        let s = sigma_build(&form, 1, Some(inner)).unwrap();
        g.bench_with_input(BenchmarkId::new("build", inner), &inner, |b, &inner| {
            b.iter(|| sigma_build(black_box(&form), 1, Some(inner)).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("exact residual", inner), &s, |b, s| {
            b.iter(|| sigma_residual_norm_sq(&form, s, ResidualMode::Exact, 20_000).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, opa_solvers, decay, linearization, sigma);
criterion_main!(benches);
