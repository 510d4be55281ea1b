use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use loc2vec::baselines::{ccdpp_factorize, CcdOptions};
use loc2vec::eval::{evaluate, GroundTruth};
use loc2vec::harness::{ExperimentConfig, Fitted};
use loc2vec::interactions::{InteractionMatrix, Weighting};
use loc2vec::parallel::Execution;
use loc2vec::recommend::{recommend_batch, Method};

fn config(method: &str) -> ExperimentConfig {
    ExperimentConfig::from_pairs([
        ("method", method),
        ("features", "32"),
        ("epochs", "2"),
        ("workers", "1"),
        ("fixture.users", "100"),
        ("fixture.venues", "200"),
        ("fixture.communities", "10"),
    ])
    .expect("bench config")
}

fn modes() -> [(&'static str, Execution); 2] {
    [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)]
}

fn recommend_and_score(c: &mut Criterion) {
    let mut group = c.benchmark_group("recommend_batch");
    group.sample_size(10);
    for method in ["KNI", "KIU", "CF"] {
        let cfg = config(method);
        let data = loc2vec::harness::load_dataset(&cfg.data).unwrap();
        let fitted = Fitted::fit(&cfg, &data).unwrap();
        let truth = GroundTruth::from_dataset(&data);
        let users = truth.users().to_vec();
        let m: Method = method.parse().unwrap();
        let rec = fitted.recommender(m, &cfg, cfg.seed).unwrap();
        for (name, exec) in modes() {
            group.bench_with_input(BenchmarkId::new(method, name), &exec, |b, &exec| {
                b.iter(|| black_box(recommend_batch(rec.as_ref(), &users, exec)))
            });
        }
        if method == "KNI" {
            let lists = recommend_batch(rec.as_ref(), &users, Execution::Parallel);
            for (name, exec) in modes() {
                group.bench_with_input(BenchmarkId::new("evaluate", name), &exec, |b, &exec| {
                    b.iter(|| black_box(evaluate(&lists, &truth, cfg.recommend.k, exec).unwrap()))
                });
            }
        }
    }
    group.finish();
}

fn ccdpp(c: &mut Criterion) {
    let cfg = config("CCD++");
    let data = loc2vec::harness::load_dataset(&cfg.data).unwrap();
    let matrix = InteractionMatrix::from_records(&data.train, Weighting::Counts);
    let mut group = c.benchmark_group("ccdpp");
    group.sample_size(10);
    for (name, exec) in modes() {
        let opts = CcdOptions { rank: 32, outer_iterations: 3, execution: exec, ..CcdOptions::default() };
        group.bench_function(name, |b| b.iter(|| black_box(ccdpp_factorize(&matrix, &opts).unwrap())));
    }
    group.finish();
}

criterion_group!(benches, recommend_and_score, ccdpp);
criterion_main!(benches);
