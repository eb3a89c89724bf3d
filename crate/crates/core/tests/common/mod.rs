#![allow(dead_code)]

use nalgebra::DMatrix;
use ontorient::linalg::Matrix;
use ontorient::matcher::match_nearest;
use ontorient::{Alignment, Correspondence, EmbeddingSpace, NodeId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn id(s: &str) -> NodeId {
    NodeId::new(s).unwrap()
}

pub fn gaussian_rows(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
        .collect()
}

/// Random orthogonal matrix from the QR factorization of a Gaussian matrix,
/// computed by nalgebra (independent of the crate's own SVD).
pub fn random_orthogonal(rng: &mut ChaCha8Rng, d: usize) -> Matrix {
    let g = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let q = g.qr().q();
    let mut out = Matrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            out[(i, j)] = q[(i, j)];
        }
    }
    out
}

pub fn row_times(x: &[f64], m: &Matrix) -> Vec<f64> {
    (0..m.cols())
        .map(|j| x.iter().enumerate().map(|(k, v)| v * m[(k, j)]).sum())
        .collect()
}

pub fn space(prefix: &str, rows: &[Vec<f64>]) -> EmbeddingSpace {
    let d = rows[0].len();
    EmbeddingSpace::from_vectors(
        d,
        rows.iter()
            .enumerate()
            .map(|(i, v)| (format!("{prefix}{i}"), v.clone())),
    )
    .unwrap()
}

pub fn ids(prefix: &str, n: usize) -> Vec<NodeId> {
    (0..n).map(|i| id(&format!("{prefix}{i}"))).collect()
}

pub fn identity_alignment(src: &str, tgt: &str, n: usize) -> Alignment {
    Alignment::from_correspondences(
        (0..n)
            .map(|i| Correspondence::exact(id(&format!("{src}{i}")), id(&format!("{tgt}{i}"))))
            .collect(),
    )
    .unwrap()
}

/// Exhaustive argmin over all pairwise distances; ties go to the smallest
/// target id. Returns (source, target) sorted by source id.
pub fn brute_force_nearest(
    src: &EmbeddingSpace,
    tgt: &EmbeddingSpace,
    sources: &[NodeId],
    targets: &[NodeId],
) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for s in sources {
        let Some(sv) = src.get(s.as_str()) else { continue };
        let mut dists: Vec<(f64, &str)> = targets
            .iter()
            .filter_map(|t| {
                tgt.get(t.as_str()).map(|tv| {
                    let d: f64 = sv.iter().zip(tv).map(|(a, b)| (a - b).powi(2)).sum();
                    (d, t.as_str())
                })
            })
            .collect();
        dists.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(b.1)));
        out.push((s.to_string(), dists[0].1.to_string()));
    }
    out.sort();
    out
}

pub fn matched_pairs(
    src: &EmbeddingSpace,
    tgt: &EmbeddingSpace,
    sources: &[NodeId],
    targets: &[NodeId],
) -> Vec<(String, String)> {
    match_nearest(src, tgt, sources, targets)
        .unwrap()
        .alignment
        .iter()
        .map(|c| (c.source.to_string(), c.target.to_string()))
        .collect()
}
