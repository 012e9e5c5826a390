use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use tiltlab::projectors::{jw, pjw, pjw_after, pqjw_recursive};
use tiltlab::quiveralg::{quiver_graph, rewrite};
use tiltlab::repchar::tilting_character;
use tiltlab_bench::words;

fn projectors(c: &mut Criterion) {
    let mut g = c.benchmark_group("pqjw-recursive");
    g.sample_size(10);
    for v in [6, 8, 10] {
        g.bench_with_input(BenchmarkId::from_parameter(v), &v, |b, &v| {
            b.iter(|| pqjw_recursive(black_box(v), 3).unwrap())
        });
    }
    g.finish();

    let mut g = c.benchmark_group("pjw-idempotent");
    g.sample_size(10);
    for v in [8, 10] {
        let f = pjw(v, 3).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(v), &v, |b, &v| b.iter(|| pjw_after(v, 3, &f).unwrap()));
    }
    g.finish();

    let j = jw(9).unwrap();
    c.bench_function("jw9-compose-self", |b| b.iter(|| j.compose(black_box(&j)).unwrap()));
}

fn quiver(c: &mut Criterion) {
    let ws = words(3, 60, 3);
    c.bench_function("rewrite-len3-p3", |b| {
        b.iter(|| ws.iter().map(|w| rewrite(w).unwrap().by_label().len()).sum::<usize>())
    });
    c.bench_function("quiver-graph-p3-500", |b| b.iter(|| quiver_graph(3, black_box(500)).unwrap()));
    c.bench_function("tilting-characters-p5-500", |b| {
        b.iter(|| (1..=500).map(|v| tilting_character(v, 5).unwrap().character.dim()).sum::<u64>())
    });
}

criterion_group!(benches, projectors, quiver);
criterion_main!(benches);
