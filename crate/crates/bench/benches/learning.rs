use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use emsbn::evalgen::{tumor_schema, GeneratorSpec};
use emsbn::params::{em, ems, EmOptions, EmsMode};
use emsbn::structure::{chow_liu, mwst_em, SearchOptions};

fn learning(c: &mut Criterion) {
    let tumor = tumor_schema(0);
    let (complete, masked) = GeneratorSpec::new(tumor.network.clone(), 500, 0.3, 1).generate().unwrap();
    let dag = tumor.network.dag();
    let one = EmOptions { max_iter: 1, ..EmOptions::seeded(0) };

    let mut g = c.benchmark_group("learning");
    g.sample_size(20);
    g.bench_function("em_iteration_tumor_500", |b| b.iter(|| em(dag, black_box(&masked), &one).unwrap()));
    g.bench_function("ems_iteration_tumor_500", |b| {
        b.iter(|| ems(dag, black_box(&masked), &one, EmsMode::PerIteration).unwrap())
    });
    g.bench_function("chow_liu_tumor_500", |b| b.iter(|| chow_liu(black_box(&complete), 0).unwrap()));
    let small = masked.subset(0..100);
    g.bench_function("mwst_em_tumor_100", |b| b.iter(|| mwst_em(black_box(&small), Some(0), &SearchOptions::seeded(0)).unwrap()));
    g.finish();
}

criterion_group!(benches, learning);
criterion_main!(benches);
