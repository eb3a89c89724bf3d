//! Structure-only graph matching through absolute orientation of embedding
//! spaces.
//!
//! Both graphs are embedded on their own (random walks fed to skip-gram with
//! negative sampling). A set of anchor correspondences fixes the orthogonal
//! map that rotates the target space onto the source space, and every source
//! node is matched to its nearest target node.
//!
//! With the default `parallel` feature, walk generation, nearest-neighbor
//! search and experiment repetitions run on the rayon pool. Every random
//! stream is keyed by a derived seed, so results are identical with or
//! without the feature and for any thread count.

pub mod alignment;
pub mod embedder;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod linalg;
pub mod matcher;
pub mod orientation;
mod par;
pub mod pipeline;
pub mod seed;
pub mod walker;

pub use alignment::{Alignment, Correspondence};
pub use embedder::{train, EmbeddingSpace, TrainingConfig};
pub use error::{Error, Result};
pub use experiments::{evaluate, EvalReport, ExperimentConfig, SweepKind, SweepResult};
pub use graph::{Graph, NodeId, Triple, TripleFormat};
pub use orientation::{apply_rotation, compute_rotation, AnchorSet, RotationModel, Side};
pub use walker::{generate_walks, WalkConfig, WalkCorpus};
