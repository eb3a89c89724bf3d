//! The rayon and sequential code paths must agree bit for bit.
#![cfg(feature = "parallel")]

mod common;

use common::*;
use ontorient::experiments::run_noise_sweep;
use ontorient::graph::generate_synthetic_graph;
use ontorient::pipeline::{embed_pair, EmbeddingParams};
use ontorient::walker::{generate_walks, WalkConfig};
use ontorient::ExperimentConfig;
use rand::Rng;

fn pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap()
}

fn on_each<T: Send + PartialEq + std::fmt::Debug>(f: impl Fn() -> T + Sync) {
    let one = pool(1).install(&f);
    let many = pool(4).install(&f);
    assert_eq!(one, many);
}

#[test]
fn walks_agree() {
    let g = generate_synthetic_graph(200, 4.0, 3).unwrap();
    let cfg = WalkConfig {
        walks_per_node: 7,
        depth: 5,
        seed: 11,
    };
    on_each(|| {
        let c = generate_walks(&g, &cfg).unwrap();
        let mut buf = Vec::new();
        c.write_text(&mut buf).unwrap();
        buf
    });
}

#[test]
fn embeddings_agree() {
    let g = generate_synthetic_graph(60, 3.0, 5).unwrap();
    let params = EmbeddingParams {
        dimension: 8,
        walks_per_node: 5,
        depth: 3,
        ..EmbeddingParams::default()
    };
    on_each(|| embed_pair(&g, &g, &params, 2).unwrap());
}

#[test]
fn matching_agrees() {
    let mut rng = rng(4);
    let rows: Vec<Vec<f64>> = (0..300)
        .map(|_| (0..4).map(|_| rng.random_range(-2i32..=2) as f64).collect())
        .collect();
    let (src, tgt) = (space("s", &rows[..150]), space("t", &rows[150..]));
    let (si, ti) = (ids("s", 150), ids("t", 150));
    on_each(|| matched_pairs(&src, &tgt, &si, &ti));
}

#[test]
fn sweeps_agree() {
    let mut cfg = ExperimentConfig::desk();
    cfg.nodes = 50;
    cfg.repetitions = 3;
    cfg.embedding.dimension = 8;
    cfg.embedding.walks_per_node = 5;
    cfg.embedding.depth = 3;
    cfg.noise_values = vec![0.0, 0.3, 0.6];
    on_each(|| run_noise_sweep(&cfg).unwrap());
}
