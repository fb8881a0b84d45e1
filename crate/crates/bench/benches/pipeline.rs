use std::hint::black_box;

use acqsim_bench::{classic, direct, overflow};
use acqsim_core::{budget_table, run, summarize, SimConfig};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn simulate(c: &mut Criterion) {
    let mut g = c.benchmark_group("run");
    for (name, t) in [("classic", classic()), ("direct", direct())] {
        g.bench_with_input(BenchmarkId::new(name, 1000), &t, |b, t| {
            b.iter(|| run(t, &SimConfig::frames(1000, 1)).unwrap())
        });
    }
    let t = overflow();
    g.bench_function(BenchmarkId::new("overflow", 5000), |b| {
        b.iter(|| run(&t, &SimConfig::frames(5000, 1)).unwrap())
    });
    g.finish();
}

fn aggregates(c: &mut Criterion) {
    let t = overflow();
    let r = run(&t, &SimConfig::frames(5000, 1)).unwrap();
    c.bench_function("summarize/5000", |b| {
        b.iter(|| summarize(black_box(&r.frames), &t))
    });
}

fn budget(c: &mut Criterion) {
    c.bench_function("budget_table/all", |b| {
        b.iter(|| budget_table(black_box(&[1, 2, 3, 4, 5]), &[1, 2, 4, 8, 16], true, 1.0).unwrap())
    });
}

criterion_group!(benches, simulate, aggregates, budget);
criterion_main!(benches);
