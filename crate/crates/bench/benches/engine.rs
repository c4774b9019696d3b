use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use vidret_bench::{random_embeddings, random_video};
use vidret_core::embedding::DEFAULT_DIM;
use vidret_core::{aggregate, rank_queries, similarity_matrix, AggregationConfig, GroundTruth};

fn bench_similarity(c: &mut Criterion) {
    let mut group = c.benchmark_group("similarity_matrix");
    group.sample_size(20);
    for n in [100usize, 1000] {
        let queries = random_embeddings(n, DEFAULT_DIM, 1);
        let gallery = random_embeddings(n, DEFAULT_DIM, 2);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| similarity_matrix(&queries, &gallery).unwrap())
        });
    }
    group.finish();
}

fn bench_ranking(c: &mut Criterion) {
    let n = 1000;
    let sim =
        similarity_matrix(&random_embeddings(n, 64, 3), &random_embeddings(n, 64, 4)).unwrap();
    let gt = GroundTruth::diagonal(&sim);
    c.bench_function("rank_queries/1000", |b| {
        b.iter(|| rank_queries(&sim, &gt).unwrap())
    });
}

fn bench_aggregation(c: &mut Criterion) {
    let video = random_video(300, DEFAULT_DIM, 5);
    let mut group = c.benchmark_group("aggregate/300_frames");
    group.bench_function("mean", |b| {
        b.iter(|| aggregate(&video, &AggregationConfig::mean()).unwrap())
    });
    for k in [2usize, 5, 10] {
        group.bench_with_input(BenchmarkId::new("kmeans", k), &k, |b, &k| {
            b.iter(|| aggregate(&video, &AggregationConfig::kmeans(k)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_similarity, bench_ranking, bench_aggregation);
criterion_main!(benches);
