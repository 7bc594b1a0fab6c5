use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gscreen_core::simgen::CohortSpec;
use gscreen_core::{
    bh_select_pvals, fisher_exact_tail, periodogram, screen, NoiseFamily, NullTailMethod,
    PeriodogramPlan, SeriesSample,
};

fn series(n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
    (0..n).map(|_| rng.random::<f64>() - 0.5).collect()
}

fn periodograms(c: &mut Criterion) {
    let mut group = c.benchmark_group("periodogram");
    for n in [20usize, 50, 512, 2048] {
        let x = series(n);
        let sample = SeriesSample::new(x.clone()).unwrap();
        group.bench_with_input(BenchmarkId::new("reference", n), &sample, |b, s| {
            b.iter(|| periodogram(black_box(s)))
        });
        let mut plan = PeriodogramPlan::new(n).unwrap();
        let mut out = Vec::new();
        group.bench_with_input(BenchmarkId::new("fft", n), &x, |b, x| {
            b.iter(|| plan.ordinates_into(black_box(x), &mut out).unwrap())
        });
    }
    group.finish();
}

fn fisher_tail(c: &mut Criterion) {
    let mut group = c.benchmark_group("fisher_tail");
    for q in [9usize, 24, 255, 1000] {
        // Near 1/q the series cancels heavily; further out only a few terms survive.
        let near = 1.0 / q as f64 + 0.5 / q as f64;
        let far = ((q as f64).ln() + 3.0) / q as f64;
        group.bench_with_input(BenchmarkId::new("near", q), &q, |b, &q| {
            b.iter(|| fisher_exact_tail(black_box(near), q).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("tail", q), &q, |b, &q| {
            b.iter(|| fisher_exact_tail(black_box(far), q).unwrap())
        });
    }
    group.finish();
}

fn bh(c: &mut Criterion) {
    let mut group = c.benchmark_group("bh_select");
    for g in [100usize, 2000, 20_000] {
        let mut rng = ChaCha8Rng::seed_from_u64(g as u64);
        let p: Vec<f64> = (0..g).map(|_| rng.random::<f64>().powi(3)).collect();
        group.bench_with_input(BenchmarkId::from_parameter(g), &p, |b, p| {
            b.iter(|| bh_select_pvals(black_box(p), 0.05).unwrap())
        });
    }
    group.finish();
}

fn cohort_screen(c: &mut Criterion) {
    let spec = CohortSpec::reference_design(50, NoiseFamily::Exp1, 1);
    let cohort = gscreen_core::generate_cohort(&spec).unwrap();
    c.bench_function("screen_2000x50", |b| {
        b.iter(|| screen(black_box(&cohort.matrix), 0.05, NullTailMethod::FisherExact).unwrap())
    });
}

criterion_group!(benches, periodograms, fisher_tail, bh, cohort_screen);
criterion_main!(benches);
