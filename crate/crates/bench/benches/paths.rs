use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

use reflectlab_core::rational::integer;
use reflectlab_core::stats::ks_two_sample;
use reflectlab_core::{ladder_levels, Law, Sampler, StoppingRule};

fn brownian(dt: f64) -> Sampler {
    Sampler::new(Law::BrownianMotion { dt, horizon: 10.0 }, 1).unwrap()
}

fn sampling(c: &mut Criterion) {
    let s = brownian(1e-3);
    let mut i = 0;
    c.bench_function("sample bm dt=1e-3 T=10", |b| {
        b.iter(|| {
            i += 1;
            black_box(s.sample(i))
        })
    });
}

fn ladder(c: &mut Criterion) {
    let s = brownian(1e-3);
    let ladder = ladder_levels(&integer(1), &integer(2), 8).unwrap();
    c.bench_function("ladder 8 steps", |b| {
        b.iter_batched(|| s.sample(7), |p| black_box(ladder.run(&p, 8).unwrap()), BatchSize::SmallInput)
    });
}

fn reflection(c: &mut Criterion) {
    let s = brownian(1e-3);
    let p = s.sample(3);
    let once = StoppingRule::parse("Tpm(1,1)").unwrap();
    let nested = StoppingRule::parse("compose(T(1),Tpm(1,2))").unwrap();
    c.bench_function("reflect at Tpm(1,1)", |b| b.iter(|| black_box(once.reflect(&p))));
    c.bench_function("reflect at compose(T(1),Tpm(1,2))", |b| b.iter(|| black_box(nested.reflect(&p))));
    let reflected = once.reflect(&p);
    let hit = StoppingRule::parse("T(2)").unwrap();
    c.bench_function("first passage on reflected path", |b| b.iter(|| black_box(hit.evaluate(&reflected))));
}

fn ks(c: &mut Criterion) {
    let s = Sampler::new(Law::BrownianMotion { dt: 0.1, horizon: 1.0 }, 5).unwrap();
    let draw = |i: u64| s.sample(i).value_at(1.0).unwrap();
    let x: Vec<f64> = (0..50_000).map(draw).collect();
    let y: Vec<f64> = (50_000..100_000).map(draw).collect();
    c.bench_function("ks two sample 5e4 x 5e4", |b| b.iter(|| black_box(ks_two_sample(&x, &y))));
}

criterion_group!(benches, sampling, ladder, reflection, ks);
criterion_main!(benches);
