use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use zpsync_bench::fixture;
use zpsync_core::{aml_estimate, ed_estimate, wed_estimate, HypothesisSet, NoiseMixture};

fn estimators(c: &mut Criterion) {
    let hyp = HypothesisSet::new(0, 60).unwrap();
    let mut group = c.benchmark_group("estimators");
    group.sample_size(20);
    for multiplier in [1, 2, 4] {
        let f = fixture(multiplier, 1);
        let len = f.config.window_len();
        let gauss = NoiseMixture::gaussian(f.mixture.avg_power()).unwrap();
        group.bench_with_input(BenchmarkId::new("aml", len), &f, |b, f| {
            b.iter(|| aml_estimate(black_box(&f.window), &f.profile, &f.mixture, hyp).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("wed", len), &f, |b, f| {
            b.iter(|| wed_estimate(black_box(&f.window), &f.profile, &gauss, hyp).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("ed", len), &f, |b, f| {
            b.iter(|| ed_estimate(black_box(&f.window), &f.config, hyp).unwrap())
        });
    }
    group.finish();
}

fn mimo(c: &mut Criterion) {
    let hyp = HypothesisSet::new(0, 60).unwrap();
    let mut group = c.benchmark_group("aml_receive_antennas");
    group.sample_size(20);
    for m_r in [1, 2, 4] {
        let f = fixture(1, m_r);
        group.bench_with_input(BenchmarkId::from_parameter(m_r), &f, |b, f| {
            b.iter(|| aml_estimate(black_box(&f.window), &f.profile, &f.mixture, hyp).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, estimators, mimo);
criterion_main!(benches);
