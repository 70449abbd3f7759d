use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use polyavg_bench::{big, curve, opts};
use polyavg_core::dio::{count_homogeneous, count_lemma1, count_lemma2, count_lemma3, max_inhomogeneous};
use polyavg_core::{parse_poly, Method};

fn mitm(c: &mut Criterion) {
    let mut g = c.benchmark_group("mitm_homogeneous");
    let cubic = curve("n^3");
    for n in [64u64, 256, 1024] {
        g.bench_with_input(BenchmarkId::new("n^3 s=2", n), &n, |b, &n| {
            b.iter(|| count_homogeneous(&cubic, 2, black_box(n), Method::Mitm, &opts()).unwrap())
        });
    }
    let moment = curve("n, n^2, n^3");
    for n in [16u64, 32] {
        g.bench_with_input(BenchmarkId::new("moment3 s=3", n), &n, |b, &n| {
            b.iter(|| count_homogeneous(&moment, 3, black_box(n), Method::Mitm, &opts()).unwrap())
        });
    }
    g.finish();
}

fn lemmas(c: &mut Criterion) {
    let mut g = c.benchmark_group("lemma_counters");
    let p = parse_poly("n^3").unwrap();
    g.bench_function("lemma1 n^3 N=1000", |b| b.iter(|| count_lemma1(&p, &big(black_box(7_999_999)), 1000, &opts()).unwrap()));
    let q = parse_poly("n^2").unwrap();
    g.bench_function("lemma2 n^2 N=64", |b| b.iter(|| count_lemma2(&q, &big(black_box(3)), &big(120), 64, &opts()).unwrap()));
    let z = [big(2), big(30), big(300)];
    g.bench_function("lemma3 N=24", |b| b.iter(|| count_lemma3([&z[0], &z[1], &z[2]], black_box(24), &opts()).unwrap()));
    g.finish();
}

fn maximum(c: &mut Criterion) {
    let mut g = c.benchmark_group("max_inhomogeneous");
    let par = curve("n, n^2");
    for n in [32u64, 128] {
        g.bench_with_input(BenchmarkId::new("parabola k=2", n), &n, |b, &n| {
            b.iter(|| max_inhomogeneous(&par, 2, black_box(n), &opts()).unwrap())
        });
    }
    g.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = mitm, lemmas, maximum
}
criterion_main!(benches);
