use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use rydmap_bench::{rect_hamiltonian, TEMPERATURE_K};
use rydmap_core::sampling::Enumerator;
use rydmap_core::{
    enumerate_stats, exact_boltzmann_sample, metropolis_sample, uniform_mc_stats, HistogramSpec, MetropolisConfig, Proposal,
};

fn bench_enumeration(c: &mut Criterion) {
    let mut group = c.benchmark_group("enumerate");
    group.sample_size(10);
    for (rows, cols) in [(4, 4), (4, 5), (4, 6)] {
        let ham = rect_hamiltonian(rows, cols, 4e-8);
        let n = rows * cols;
        group.throughput(Throughput::Elements(1 << n));
        group.bench_with_input(BenchmarkId::new("stats", n), &ham, |b, ham| {
            b.iter(|| black_box(enumerate_stats(ham, TEMPERATURE_K, HistogramSpec::default()).unwrap()))
        });
        let en = Enumerator::new(&ham).unwrap();
        group.bench_with_input(BenchmarkId::new("for_each", n), &en, |b, en| {
            b.iter(|| {
                let mut acc = 0.0;
                en.for_each(|_, _, linear, pair| acc += linear + pair);
                black_box(acc)
            })
        });
    }
    group.finish();
}

fn bench_samplers(c: &mut Criterion) {
    let ham = rect_hamiltonian(3, 4, 4e-8);
    let shots = 1000;
    let mut group = c.benchmark_group("sample");
    group.throughput(Throughput::Elements(shots as u64));
    group.bench_function("exact", |b| {
        b.iter(|| black_box(exact_boltzmann_sample(&ham, TEMPERATURE_K, shots, 1).unwrap()))
    });
    group.bench_function("metropolis", |b| {
        b.iter(|| black_box(metropolis_sample(&ham, TEMPERATURE_K, shots, MetropolisConfig::default(), 1).unwrap()))
    });
    group.bench_function("umc", |b| {
        b.iter(|| {
            let proposal = Proposal::StratifiedComposition { k_min: 0, k_max: 12 };
            black_box(uniform_mc_stats(&ham, TEMPERATURE_K, 100_000, proposal, 1, HistogramSpec::default()).unwrap())
        })
    });
    group.finish();
}

criterion_group!(benches, bench_enumeration, bench_samplers);
criterion_main!(benches);
