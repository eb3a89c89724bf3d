//! Anchor sampling, anchor distortion and nearest-neighbor matching.

use std::collections::HashSet;

use log::debug;
use rand::seq::index;
use rand::Rng as _;

use crate::alignment::{Alignment, Correspondence};
use crate::embedder::EmbeddingSpace;
use crate::error::{Error, Result};
use crate::graph::{floor_share, NodeId};
use crate::orientation::AnchorSet;
use crate::par;
use crate::seed::rng_from_seed;

/// Splits `a` into a train part of `⌊alpha·|a|⌋` uniformly sampled
/// correspondences and the remaining test part. Both keep the input order.
pub fn split_alignment(a: &Alignment, alpha: f64, seed: u64) -> Result<(Alignment, Alignment)> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid_argument(format!("alpha {alpha} outside (0, 1)")));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::invalid_argument("cannot split fewer than 2 correspondences"));
    }
    let k = floor_share(alpha, n);
    if k == 0 {
        return Err(Error::invalid_argument(format!(
            "alpha {alpha} of {n} correspondences leaves no anchors"
        )));
    }
    let mut in_train = vec![false; n];
    let mut rng = rng_from_seed(seed);
    for i in index::sample(&mut rng, n, k) {
        in_train[i] = true;
    }
    let (mut train, mut test) = (Vec::with_capacity(k), Vec::with_capacity(n - k));
    for (c, &t) in a.iter().zip(&in_train) {
        if t {
            train.push(c.clone());
        } else {
            test.push(c.clone());
        }
    }
    Ok((Alignment::from_unique(train), Alignment::from_unique(test)))
}

/// Replaces the target of `⌊noise_rate·|train|⌋` uniformly chosen
/// correspondences with a random node of `target_pool` other than the
/// original target. Order and untouched entries are preserved.
pub fn inject_noise(
    train: &Alignment,
    noise_rate: f64,
    target_pool: &[NodeId],
    seed: u64,
) -> Result<Alignment> {
    if !(0.0..=1.0).contains(&noise_rate) {
        return Err(Error::invalid_argument(format!(
            "noise rate {noise_rate} outside [0, 1]"
        )));
    }
    let mut seen = HashSet::with_capacity(target_pool.len());
    let pool: Vec<&NodeId> = target_pool.iter().filter(|n| seen.insert(*n)).collect();
    if pool.len() < 2 {
        return Err(Error::invalid_argument("target pool needs at least 2 distinct nodes"));
    }
    let n = train.len();
    let k = floor_share(noise_rate, n);
    let mut out: Vec<Correspondence> = train.correspondences().to_vec();
    if k == 0 {
        return Ok(train.clone());
    }
    let mut pairs: HashSet<(NodeId, NodeId)> = out
        .iter()
        .map(|c| (c.source.clone(), c.target.clone()))
        .collect();
    let mut rng = rng_from_seed(seed);
    let mut chosen = index::sample(&mut rng, n, k).into_vec();
    chosen.sort_unstable();
    for i in chosen {
        let original = out[i].target.clone();
        let skip = pool.iter().position(|p| **p == original);
        let choices = pool.len() - usize::from(skip.is_some());
        let replacement = loop {
            let mut r = rng.random_range(0..choices);
            if skip.is_some_and(|s| r >= s) {
                r += 1;
            }
            let candidate = pool[r].clone();
            // the pair must stay unique; with repeated sources this can clash
            if !pairs.contains(&(out[i].source.clone(), candidate.clone())) {
                break candidate;
            }
            if choices == 1 {
                return Err(Error::invalid_input(format!(
                    "no replacement target available for {}",
                    out[i].source
                )));
            }
        };
        pairs.remove(&(out[i].source.clone(), original));
        pairs.insert((out[i].source.clone(), replacement.clone()));
        out[i].target = replacement;
    }
    Ok(Alignment::from_unique(out))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkippedAnchor {
    pub source: NodeId,
    pub target: NodeId,
    /// The node id without a vector.
    pub missing: NodeId,
}

#[derive(Debug, Clone)]
pub struct AnchorBuild {
    pub anchors: AnchorSet,
    /// Correspondences that produced an anchor pair, in order.
    pub used: Alignment,
    pub skipped: Vec<SkippedAnchor>,
}

/// Looks up the vectors of every train correspondence. Correspondences with
/// a missing vector are skipped and reported.
pub fn build_anchor_set(
    train: &Alignment,
    src: &EmbeddingSpace,
    tgt: &EmbeddingSpace,
) -> Result<AnchorBuild> {
    if src.dimension() != tgt.dimension() {
        return Err(Error::invalid_argument(format!(
            "source dimension {} differs from target dimension {}",
            src.dimension(),
            tgt.dimension()
        )));
    }
    let mut anchors = AnchorSet::new(src.dimension())?;
    let mut used = Vec::new();
    let mut skipped = Vec::new();
    for c in train {
        match (src.get(c.source.as_str()), tgt.get(c.target.as_str())) {
            (Some(a), Some(b)) => {
                anchors.push(a, b)?;
                used.push(c.clone());
            }
            (a, _) => {
                let missing = if a.is_none() { &c.source } else { &c.target };
                debug!("anchor ({}, {}) skipped: no vector for {missing}", c.source, c.target);
                skipped.push(SkippedAnchor {
                    source: c.source.clone(),
                    target: c.target.clone(),
                    missing: missing.clone(),
                });
            }
        }
    }
    if anchors.is_empty() {
        return Err(Error::invalid_input("no usable anchors"));
    }
    Ok(AnchorBuild {
        anchors,
        used: Alignment::from_unique(used),
        skipped,
    })
}

#[derive(Debug, Clone)]
pub struct MatchOutcome {
    /// One correspondence per source candidate with a vector, sorted by
    /// source id.
    pub alignment: Alignment,
    pub skipped_sources: usize,
    pub skipped_targets: usize,
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Maps every source candidate to its Euclidean-nearest target candidate.
///
/// Both spaces must already be in the common frame. Several sources may map
/// to the same target. Equal distances resolve to the lexicographically
/// smallest target id. Confidence is `1 / (1 + distance)`.
pub fn match_nearest(
    src: &EmbeddingSpace,
    tgt: &EmbeddingSpace,
    candidates_src: &[NodeId],
    candidates_tgt: &[NodeId],
) -> Result<MatchOutcome> {
    if src.dimension() != tgt.dimension() {
        return Err(Error::invalid_argument(format!(
            "source dimension {} differs from target dimension {}",
            src.dimension(),
            tgt.dimension()
        )));
    }
    if candidates_src.is_empty() || candidates_tgt.is_empty() {
        return Err(Error::invalid_argument("candidate sets must be non-empty"));
    }

    let mut targets: Vec<&NodeId> = candidates_tgt.iter().collect();
    targets.sort();
    targets.dedup();
    let total_targets = targets.len();
    let targets: Vec<(&NodeId, &[f64])> = targets
        .into_iter()
        .filter_map(|t| tgt.get(t.as_str()).map(|v| (t, v)))
        .collect();
    let skipped_targets = total_targets - targets.len();
    if targets.is_empty() {
        return Err(Error::invalid_input("no target candidate has a vector"));
    }

    let mut sources: Vec<&NodeId> = candidates_src.iter().collect();
    sources.sort();
    sources.dedup();
    let total_sources = sources.len();
    let sources: Vec<(&NodeId, &[f64])> = sources
        .into_iter()
        .filter_map(|s| src.get(s.as_str()).map(|v| (s, v)))
        .collect();
    let skipped_sources = total_sources - sources.len();

    let matched: Vec<Correspondence> = par::map(&sources, |&(s, v)| {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, (_, t)) in targets.iter().enumerate() {
            let d = squared_distance(v, t);
            // strict comparison keeps the smallest id among ties
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        Correspondence {
            source: s.clone(),
            target: targets[best].0.clone(),
            confidence: 1.0 / (1.0 + best_d.sqrt()),
        }
    });

    Ok(MatchOutcome {
        alignment: Alignment::from_unique(matched),
        skipped_sources,
        skipped_targets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(s: &str) -> NodeId {
        NodeId::new(s).unwrap()
    }

    fn identity_alignment(n: usize) -> Alignment {
        Alignment::from_correspondences(
            (0..n)
                .map(|i| Correspondence::exact(id(&format!("n{i}")), id(&format!("n{i}'"))))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn split_sizes() {
        let a = identity_alignment(2500);
        let (train, test) = split_alignment(&a, 0.2, 3).unwrap();
        assert_eq!((train.len(), test.len()), (500, 2000));
        let again = split_alignment(&a, 0.2, 3).unwrap();
        assert_eq!(again.0, train);
        assert_eq!(again.1, test);
        let train_src: HashSet<&NodeId> = train.sources().collect();
        assert!(test.sources().all(|s| !train_src.contains(s)));
    }

    #[test]
    fn split_rejects_degenerate_requests() {
        let a = identity_alignment(2);
        assert!(matches!(split_alignment(&a, 0.2, 1), Err(Error::InvalidArgument(_))));
        assert!(split_alignment(&a, 0.0, 1).is_err());
        assert!(split_alignment(&a, 1.0, 1).is_err());
        assert!(split_alignment(&identity_alignment(1), 0.5, 1).is_err());
        assert_eq!(split_alignment(&a, 0.5, 1).unwrap().0.len(), 1);
    }

    #[test]
    fn zero_noise_is_identity() {
        let a = identity_alignment(10);
        let pool: Vec<NodeId> = a.iter().map(|c| c.target.clone()).collect();
        assert_eq!(inject_noise(&a, 0.0, &pool, 5).unwrap(), a);
    }

    #[test]
    fn full_noise_with_two_node_pool_is_forced() {
        let a = identity_alignment(2);
        let pool = vec![id("n0'"), id("n1'")];
        let noisy = inject_noise(&a, 1.0, &pool, 5).unwrap();
        assert_eq!(noisy.correspondences()[0].target, id("n1'"));
        assert_eq!(noisy.correspondences()[1].target, id("n0'"));
        assert_eq!(noisy.correspondences()[0].source, id("n0"));
    }

    #[test]
    fn noise_changes_exact_count() {
        let a = identity_alignment(37);
        let pool: Vec<NodeId> = (0..60).map(|i| id(&format!("n{i}'"))).collect();
        for step in 0..10 {
            let rate = step as f64 / 10.0;
            let noisy = inject_noise(&a, rate, &pool, step).unwrap();
            let changed = a.iter().zip(&noisy).filter(|(x, y)| x.target != y.target).count();
            assert_eq!(changed, floor_share(rate, 37));
            assert!(a.iter().zip(&noisy).all(|(x, y)| x.source == y.source));
        }
    }

    #[test]
    fn noise_validates_pool() {
        let a = identity_alignment(3);
        assert!(inject_noise(&a, 0.5, &[id("x")], 1).is_err());
        assert!(inject_noise(&a, 0.5, &[id("x"), id("x")], 1).is_err());
        assert!(inject_noise(&a, 1.5, &[id("x"), id("y")], 1).is_err());
    }

    fn space(entries: &[(&str, [f64; 2])]) -> EmbeddingSpace {
        EmbeddingSpace::from_vectors(2, entries.iter().map(|(t, v)| (*t, v.to_vec()))).unwrap()
    }

    #[test]
    fn anchors_skip_missing_vectors() {
        let src = space(&[("a", [0.0, 0.0]), ("b", [1.0, 0.0])]);
        let tgt = space(&[("a'", [0.0, 1.0])]);
        let train = Alignment::from_correspondences(vec![
            Correspondence::exact(id("a"), id("a'")),
            Correspondence::exact(id("b"), id("b'")),
        ])
        .unwrap();
        let built = build_anchor_set(&train, &src, &tgt).unwrap();
        assert_eq!(built.anchors.len(), 1);
        assert_eq!(built.skipped.len(), 1);
        assert_eq!(built.skipped[0].missing, id("b'"));
        assert_eq!(built.anchors.target(0), &[0.0, 1.0]);

        let only_missing =
            Alignment::from_correspondences(vec![Correspondence::exact(id("b"), id("b'"))]).unwrap();
        let err = build_anchor_set(&only_missing, &src, &tgt).unwrap_err();
        assert!(err.to_string().contains("no usable anchors"));
    }

    #[test]
    fn nearest_on_a_line() {
        let src = space(&[("s1", [0.0, 0.0]), ("s2", [10.0, 0.0])]);
        let tgt = space(&[("t1", [1.0, 0.0]), ("t2", [9.0, 0.0])]);
        let out = match_nearest(&src, &tgt, &[id("s2"), id("s1")], &[id("t1"), id("t2")]).unwrap();
        let pairs: Vec<(&str, &str)> = out
            .alignment
            .iter()
            .map(|c| (c.source.as_str(), c.target.as_str()))
            .collect();
        assert_eq!(pairs, vec![("s1", "t1"), ("s2", "t2")]);
        assert!((out.alignment.correspondences()[0].confidence - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ties_prefer_smallest_target_id() {
        let src = space(&[("s", [0.0, 0.0])]);
        let tgt = space(&[("b", [1.0, 0.0]), ("a", [-1.0, 0.0]), ("c", [0.0, 1.0])]);
        let out = match_nearest(&src, &tgt, &[id("s")], &[id("c"), id("b"), id("a")]).unwrap();
        assert_eq!(out.alignment.correspondences()[0].target, id("a"));
    }

    #[test]
    fn missing_candidates_are_counted() {
        let src = space(&[("s", [0.0, 0.0])]);
        let tgt = space(&[("t", [1.0, 0.0])]);
        let out = match_nearest(&src, &tgt, &[id("s"), id("ghost")], &[id("t"), id("gone")]).unwrap();
        assert_eq!(out.alignment.len(), 1);
        assert_eq!(out.skipped_sources, 1);
        assert_eq!(out.skipped_targets, 1);
        assert!(match_nearest(&src, &tgt, &[], &[id("t")]).is_err());
        assert!(match_nearest(&src, &tgt, &[id("s")], &[id("gone")]).is_err());
    }

    #[test]
    fn identical_copy_matches_itself() {
        let src = space(&[("a", [0.0, 1.0]), ("b", [2.0, -1.0]), ("c", [5.0, 5.0])]);
        let tgt = space(&[("a'", [0.0, 1.0]), ("b'", [2.0, -1.0]), ("c'", [5.0, 5.0])]);
        let s: Vec<NodeId> = ["a", "b", "c"].iter().map(|x| id(x)).collect();
        let t: Vec<NodeId> = ["a'", "b'", "c'"].iter().map(|x| id(x)).collect();
        let out = match_nearest(&src, &tgt, &s, &t).unwrap();
        for c in &out.alignment {
            assert_eq!(format!("{}'", c.source), c.target.as_str());
            assert_eq!(c.confidence, 1.0);
        }
    }
}
