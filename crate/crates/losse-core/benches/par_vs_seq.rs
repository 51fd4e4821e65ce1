//! Parallel vs sequential fan-out on the two experiment-shaped workloads:
//! multi-seed stream-learning replicas and batch encoding.
//!
//! With `--no-default-features` the parallel path degrades to the
//! sequential one; run with defaults to compare rayon against the
//! single-thread reference.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use losse_core::encoding::{LosseConfig, LosseEncoder};
use losse_core::env::{PrwConfig, PrwStream};
use losse_core::learner::FtlLearner;
use losse_core::parallel::{par_map, seq_map};

/// One stream-learning replica: encode and absorb `steps` samples.
fn stream_replica(seed: u64, steps: usize) -> f64 {
    let encoder = LosseEncoder::new(LosseConfig::new(1, 4, 2, 8, seed)).unwrap();
    let mut learner = FtlLearner::new(encoder.output_dim(), 1, 1e-2).unwrap();
    let mut stream = PrwStream::new(PrwConfig::new(0.9, seed)).unwrap();
    for _ in 0..steps {
        let (x, y) = stream.next_sample();
        let phi = encoder.encode(&[x]).unwrap();
        learner.observe_sparse(&phi, &[y]).unwrap();
    }
    learner.weights().iter().sum()
}

fn bench_stream_replicas(c: &mut Criterion) {
    let mut group = c.benchmark_group("stream_replicas");
    group.sample_size(10);
    for replicas in [4usize, 8] {
        let seeds: Vec<u64> = (0..replicas as u64).collect();
        group.bench_with_input(
            BenchmarkId::new("parallel", replicas),
            &seeds,
            |b, seeds| {
                b.iter(|| par_map(seeds.clone(), |s| stream_replica(s, 1000)));
            },
        );
        group.bench_with_input(
            BenchmarkId::new("sequential", replicas),
            &seeds,
            |b, seeds| {
                b.iter(|| seq_map(seeds.clone(), |s| stream_replica(s, 1000)));
            },
        );
    }
    group.finish();
}

fn bench_encode_batch(c: &mut Criterion) {
    let encoder = LosseEncoder::new(LosseConfig::new(6, 30, 2, 10, 3)).unwrap();
    let inputs: Vec<Vec<f64>> = (0..20_000)
        .map(|i| {
            (0..6)
                .map(|d| ((i * 7 + d * 13) % 600) as f64 / 100.0 - 3.0)
                .collect()
        })
        .collect();
    // Chunked so each job is coarse enough to amortize scheduling.
    let chunks: Vec<Vec<Vec<f64>>> = inputs.chunks(2500).map(|c| c.to_vec()).collect();
    let mut group = c.benchmark_group("encode_batch");
    group.sample_size(20);
    group.bench_function("parallel", |b| {
        b.iter(|| {
            par_map(chunks.clone(), |chunk| {
                chunk
                    .iter()
                    .map(|x| encoder.encode(x).unwrap().nnz())
                    .sum::<usize>()
            })
        });
    });
    group.bench_function("sequential", |b| {
        b.iter(|| {
            seq_map(chunks.clone(), |chunk| {
                chunk
                    .iter()
                    .map(|x| encoder.encode(x).unwrap().nnz())
                    .sum::<usize>()
            })
        });
    });
    group.finish();
}

criterion_group!(benches, bench_stream_replicas, bench_encode_batch);
criterion_main!(benches);
