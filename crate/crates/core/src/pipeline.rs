//! End-to-end matching of two graphs: walk and embed each graph on its own,
//! fit the rotation on the anchors, move both spaces into the centered source
//! frame and assign each source node its nearest target node.

use crate::alignment::Alignment;
use crate::embedder::{self, EmbeddingSpace, TrainingConfig};
use crate::error::Result;
use crate::graph::Graph;
use crate::matcher::{build_anchor_set, match_nearest, SkippedAnchor};
use crate::orientation::{apply_rotation, compute_rotation, RotationModel, Side};
use crate::par;
use crate::seed::derive_seed;
use crate::walker::{generate_walks, WalkConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingParams {
    pub walks_per_node: usize,
    pub depth: usize,
    pub dimension: usize,
    pub window: usize,
    pub epochs: usize,
    pub negatives: usize,
    pub learning_rate: f64,
    pub min_count: u64,
    pub subsample: f64,
    pub shrink_window: bool,
}

impl Default for EmbeddingParams {
    fn default() -> Self {
        let t = TrainingConfig::default();
        let w = WalkConfig::default();
        EmbeddingParams {
            walks_per_node: w.walks_per_node,
            depth: w.depth,
            dimension: t.dimension,
            window: t.window,
            epochs: t.epochs,
            negatives: t.negatives,
            learning_rate: t.learning_rate,
            min_count: t.min_count,
            subsample: t.subsample,
            shrink_window: t.shrink_window,
        }
    }
}

impl EmbeddingParams {
    pub fn walk_config(&self, seed: u64) -> WalkConfig {
        WalkConfig {
            walks_per_node: self.walks_per_node,
            depth: self.depth,
            seed,
        }
    }

    pub fn training_config(&self, seed: u64) -> TrainingConfig {
        TrainingConfig {
            dimension: self.dimension,
            window: self.window,
            epochs: self.epochs,
            negatives: self.negatives,
            learning_rate: self.learning_rate,
            min_count: self.min_count,
            subsample: self.subsample,
            shrink_window: self.shrink_window,
            seed,
        }
    }
}

/// Walks `g` and trains its embedding; both streams derive from `seed`.
pub fn embed_graph(g: &Graph, params: &EmbeddingParams, seed: u64) -> Result<EmbeddingSpace> {
    let corpus = generate_walks(g, &params.walk_config(derive_seed(seed, b"walks")))?;
    embedder::train(&corpus, &params.training_config(derive_seed(seed, b"train")))
}

/// Source and target embeddings trained independently (and concurrently
/// when the `parallel` feature is on).
pub fn embed_pair(
    source: &Graph,
    target: &Graph,
    params: &EmbeddingParams,
    seed: u64,
) -> Result<(EmbeddingSpace, EmbeddingSpace)> {
    let (s, t) = par::join(
        || embed_graph(source, params, derive_seed(seed, b"source")),
        || embed_graph(target, params, derive_seed(seed, b"target")),
    );
    Ok((s?, t?))
}

#[derive(Debug, Clone)]
pub struct AlignedSpaces {
    pub model: RotationModel,
    /// Source space centered on the source anchor mean.
    pub source: EmbeddingSpace,
    /// Target space centered on the target anchor mean and rotated.
    pub target: EmbeddingSpace,
    pub skipped_anchors: Vec<SkippedAnchor>,
}

/// Fits the rotation on `anchors` and expresses both spaces in the centered
/// source frame.
pub fn align_spaces(
    source: &EmbeddingSpace,
    target: &EmbeddingSpace,
    anchors: &Alignment,
) -> Result<AlignedSpaces> {
    let built = build_anchor_set(anchors, source, target)?;
    let model = compute_rotation(&built.anchors)?;
    Ok(AlignedSpaces {
        source: apply_rotation(&model, source, Side::Source)?,
        target: apply_rotation(&model, target, Side::Target)?,
        model,
        skipped_anchors: built.skipped,
    })
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub predicted: Alignment,
    pub aligned: AlignedSpaces,
    pub skipped_sources: usize,
    pub skipped_targets: usize,
}

/// Matches all nodes of `source` against all nodes of `target` in the
/// aligned frame.
pub fn match_graphs(
    source: &Graph,
    target: &Graph,
    source_space: &EmbeddingSpace,
    target_space: &EmbeddingSpace,
    anchors: &Alignment,
) -> Result<PipelineOutput> {
    let aligned = align_spaces(source_space, target_space, anchors)?;
    let outcome = match_nearest(&aligned.source, &aligned.target, source.nodes(), target.nodes())?;
    Ok(PipelineOutput {
        predicted: outcome.alignment,
        aligned,
        skipped_sources: outcome.skipped_sources,
        skipped_targets: outcome.skipped_targets,
    })
}

/// The whole pipeline from two graphs and an anchor alignment.
pub fn run_pipeline(
    source: &Graph,
    target: &Graph,
    anchors: &Alignment,
    params: &EmbeddingParams,
    seed: u64,
) -> Result<PipelineOutput> {
    let (s, t) = embed_pair(source, target, params, seed)?;
    match_graphs(source, target, &s, &t, anchors)
}
