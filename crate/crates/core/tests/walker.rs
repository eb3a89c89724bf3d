use std::collections::HashSet;

use ontorient::graph::generate_synthetic_graph;
use ontorient::walker::{generate_walks, WalkConfig, WalkCorpus};
use ontorient::Graph;
use proptest::prelude::*;

fn config(walks: usize, depth: usize, seed: u64) -> WalkConfig {
    WalkConfig {
        walks_per_node: walks,
        depth,
        seed,
    }
}

fn dump(c: &WalkCorpus) -> Vec<u8> {
    let mut buf = Vec::new();
    c.write_text(&mut buf).unwrap();
    buf
}

fn check_corpus(g: &Graph, c: &WalkCorpus, walks: usize, depth: usize) -> Result<(), TestCaseError> {
    let edges: HashSet<(&str, &str, &str)> = g
        .triples()
        .iter()
        .map(|t| (t.subject.as_str(), t.predicate.as_str(), t.object.as_str()))
        .collect();
    prop_assert_eq!(c.walk_count(), g.node_count() * walks);
    for (i, v) in g.nodes().iter().enumerate() {
        for k in 0..walks {
            let w = c.walk_tokens(i * walks + k);
            prop_assert_eq!(w[0], v.as_str());
            prop_assert!(w.len() % 2 == 1 && w.len() <= 2 * depth + 1);
            for step in w.windows(3).step_by(2) {
                prop_assert!(edges.contains(&(step[0], step[1], step[2])), "{:?}", step);
            }
            // a short walk must end at a dead end
            if w.len() < 2 * depth + 1 {
                let last = g.node_index(w[w.len() - 1]).unwrap();
                prop_assert_eq!(g.out_degree(last), 0);
            }
        }
    }
    for v in g.nodes() {
        prop_assert!(c.count_of(v.as_str()) >= walks as u64);
    }
    let vocab: HashSet<&str> = c.walks().flatten().map(|&t| c.token(t)).collect();
    prop_assert_eq!(vocab.len(), c.vocabulary().len());
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn walks_follow_triples(
        n in 1usize..40,
        lambda in 0.0f64..4.0,
        walks in 1usize..6,
        depth in 1usize..7,
        seed in any::<u64>(),
    ) {
        let g = generate_synthetic_graph(n, lambda, seed).unwrap();
        let c = generate_walks(&g, &config(walks, depth, seed)).unwrap();
        check_corpus(&g, &c, walks, depth)?;
    }

    #[test]
    fn walks_are_deterministic(n in 1usize..30, seed in any::<u64>()) {
        let g = generate_synthetic_graph(n, 3.0, seed).unwrap();
        let a = generate_walks(&g, &config(4, 5, seed)).unwrap();
        let b = generate_walks(&g, &config(4, 5, seed)).unwrap();
        prop_assert_eq!(dump(&a), dump(&b));
    }
}

#[test]
fn seed_changes_the_corpus() {
    let g = generate_synthetic_graph(50, 4.0, 1).unwrap();
    let a = generate_walks(&g, &config(5, 4, 1)).unwrap();
    let b = generate_walks(&g, &config(5, 4, 2)).unwrap();
    assert_ne!(dump(&a), dump(&b));
}

#[test]
fn a_node_walk_does_not_depend_on_other_nodes() {
    // same node and seed, one extra unrelated node: identical walks from "n0"
    let g = generate_synthetic_graph(30, 3.0, 4).unwrap();
    let mut triples = g.triples().to_vec();
    let mut nodes = g.nodes().to_vec();
    nodes.push(ontorient::NodeId::new("extra").unwrap());
    let extended = Graph::new(nodes, std::mem::take(&mut triples)).unwrap();
    let a = generate_walks(&g, &config(3, 4, 9)).unwrap();
    let b = generate_walks(&extended, &config(3, 4, 9)).unwrap();
    for i in 0..3 {
        assert_eq!(a.walk_tokens(i), b.walk_tokens(i));
    }
}
