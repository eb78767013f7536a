//! Sequential against data-parallel execution of the heavy stages.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use vmeme::correlogram::{collection_max_matrix, extract_batch, DEFAULT_DISTANCES};
use vmeme::imgproc::{prepare_frame, PrepOptions};
use vmeme::memedetect::{candidates, AnnIndex, IndexParams, DEFAULT_KNN};
use vmeme::memegraph::{betweenness, Adjacency};
use vmeme::synth::features::{clustered_gaussian, ClusteredSpec};
use vmeme::synth::images::{generate_image_corpus, ImageCorpusSpec};
use vmeme::synth::topics::planted_topics;
use vmeme::topics::{fit_lda, LdaParams};
use vmeme::Exec;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn correlograms(c: &mut Criterion) {
    let spec = ImageCorpusSpec {
        videos: 30,
        groups: 10,
        ..Default::default()
    };
    let corpus = generate_image_corpus(&spec, 1).unwrap();
    let frames: Vec<_> = corpus
        .frames
        .iter()
        .map(|(_, img)| prepare_frame(img, &PrepOptions::default()).unwrap())
        .collect();
    let mut g = c.benchmark_group("extract_batch");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(name, |b| b.iter(|| black_box(extract_batch(exec, &frames, &DEFAULT_DISTANCES))));
    }
    g.finish();
}

fn matching(c: &mut Criterion) {
    let data = clustered_gaussian(
        ClusteredSpec {
            rows: 4000,
            groups: 400,
            ..Default::default()
        },
        2,
    );
    let fmax = collection_max_matrix(Exec::Parallel, &data).unwrap();
    let index = AnnIndex::build(Exec::Parallel, data, &IndexParams::default()).unwrap();
    let mut g = c.benchmark_group("candidates");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(name, |b| b.iter(|| black_box(candidates(exec, &index, &fmax, DEFAULT_KNN).unwrap())));
    }
    g.finish();
}

fn centrality(c: &mut Criterion) {
    let n = 600;
    let edges = (0..n).flat_map(|i| [(i, (i * 7 + 1) % n), (i, (i * 13 + 5) % n), (i, (i + 1) % n)]);
    let adj = Adjacency::new(n, false, edges.filter(|(a, b)| a != b));
    let mut g = c.benchmark_group("betweenness");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &adj, |b, adj| b.iter(|| black_box(betweenness(exec, adj))));
    }
    g.finish();
}

fn topics(c: &mut Criterion) {
    let corpus = planted_topics(400, 8, 20, 60, 0.2, 3);
    let params = LdaParams {
        k: 8,
        max_iters: 5,
        ..Default::default()
    };
    let mut g = c.benchmark_group("fit_lda");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(name, |b| b.iter(|| black_box(fit_lda(exec, &corpus.docs, corpus.vocab, &params).unwrap())));
    }
    g.finish();
}

criterion_group!(benches, correlograms, matching, centrality, topics);
criterion_main!(benches);
