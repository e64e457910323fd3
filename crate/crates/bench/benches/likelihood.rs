use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use zpsync_bench::fixture;
use zpsync_core::likelihood::{log_p_function, LikelihoodTable};
use zpsync_core::{window_loglik, Complex64};

fn likelihood(c: &mut Criterion) {
    let f = fixture(1, 1);
    let slices: Vec<&[Complex64]> = f.window.iter().map(Vec::as_slice).collect();

    c.bench_function("log_p_single_sample", |b| {
        let y = Complex64::new(0.3, -0.7);
        b.iter(|| log_p_function(black_box(y), 0.4, &f.mixture).unwrap())
    });
    c.bench_function("table_build", |b| {
        b.iter(|| LikelihoodTable::new(black_box(&f.profile), &f.mixture))
    });
    c.bench_function("window_loglik_one_hypothesis", |b| {
        b.iter(|| window_loglik(black_box(&f.window), 7, &f.profile, &f.mixture).unwrap())
    });
    let table = LikelihoodTable::new(&f.profile, &f.mixture);
    c.bench_function("table_score_one_hypothesis", |b| {
        b.iter(|| table.score(black_box(&slices), 7))
    });
    c.bench_function("table_scores_61_hypotheses", |b| {
        b.iter(|| table.scores(black_box(&slices), -30, 30))
    });
}

criterion_group!(benches, likelihood);
criterion_main!(benches);
