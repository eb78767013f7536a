//! Near-duplicate keyframe detection.
//!
//! Features are indexed for approximate nearest-neighbour search, each
//! frame keeps the neighbours inside its query-adaptive threshold, and the
//! resulting pairs are closed transitively into meme clusters.

mod clusters;
mod distance;
mod eval;
mod index;
mod kdforest;
mod kmeans_tree;
mod matching;
mod unionfind;

pub use clusters::{filter_clusters, ClusterRecord, MemeCluster};
pub use distance::{sq_dist, Neighbor};
pub use eval::{
    best_f1, evaluate, evaluate_clusters, evaluate_pairs, resolve_labels, score, sweep, EvalMode, LabeledPair,
    OperatingPoint, Prf, RowLabel,
};
pub use index::{default_budget, exact_knn, AnnIndex, IndexChoice, IndexKind, IndexParams, ProbeReport, DEFAULT_KNN};
pub use kdforest::KdForest;
pub use kmeans_tree::KMeansTree;
pub use matching::{candidates, match_all, query_threshold, Candidates, MatchPair};
pub use unionfind::{components, UnionFind};

/// Default threshold scale.
pub const DEFAULT_TAU: f64 = 11.5;

/// Closes matched pairs over `n` feature rows into connected components.
pub fn close_clusters(n: usize, pairs: &[MatchPair]) -> Vec<Vec<u32>> {
    components(n, pairs.iter().map(|p| (p.a, p.b)))
}
