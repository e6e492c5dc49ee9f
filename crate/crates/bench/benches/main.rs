use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use cfi_core::{
    build_canonical_layout, enumerate_paths_oracle, image_mask, p_triple_equal_t, simulate,
    trace_layout, ChainConfig, ImagingRun, ObjectMask, ObjectModel, Spacings,
};

fn bench_simulate(c: &mut Criterion) {
    let mut group = c.benchmark_group("simulate_absorbing");
    for n in [4usize, 12, 20, 40] {
        let config = ChainConfig::uniform(n, 0.5);
        group.bench_with_input(BenchmarkId::from_parameter(n), &config, |b, config| {
            b.iter(|| simulate(config, &ObjectModel::Absorbing).unwrap())
        });
    }
    group.finish();
}

fn bench_oracle(c: &mut Criterion) {
    let config = ChainConfig::uniform(8, 0.5);
    c.bench_function("oracle_n8", |b| {
        b.iter(|| enumerate_paths_oracle(&config, &ObjectModel::Absorbing).unwrap())
    });
}

fn bench_closed_form(c: &mut Criterion) {
    c.bench_function("p_triple_equal_t_n10000", |b| {
        b.iter(|| p_triple_equal_t(0.5, 10_000).unwrap())
    });
}

fn bench_imaging(c: &mut Criterion) {
    let mask = ObjectMask::filled(16, 16, ObjectModel::Absorbing);
    let run = ImagingRun {
        config: ChainConfig::uniform(20, 0.5),
        photons_per_pixel: 10,
        seed: 1,
    };
    c.bench_function("image_16x16_m10", |b| {
        b.iter(|| image_mask(&mask, &run).unwrap())
    });
}

fn bench_geometry(c: &mut Criterion) {
    let spacings = Spacings::new(17.0, 8.0, 15.0).unwrap();
    c.bench_function("build_and_trace_n8", |b| {
        b.iter(|| {
            let layout = build_canonical_layout(&spacings, 8, 1.0).unwrap();
            trace_layout(&layout, 1e-9).unwrap()
        })
    });
}

criterion_group!(
    benches,
    bench_simulate,
    bench_oracle,
    bench_closed_form,
    bench_imaging,
    bench_geometry
);
criterion_main!(benches);
