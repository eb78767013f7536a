//! Diffusion graphs over videos and authors, and the statistics computed
//! on them.

mod centrality;
mod export;
mod graph;
mod influence;
mod originality;
mod stats;

pub use centrality::{betweenness, centralities, closeness, degree, Centrality};
pub use export::{write_author_edges, write_influence, write_originality, write_video_edges};
pub use graph::{
    build_author_graph, build_video_graph, omega_prime, Adjacency, AuthorEdge, AuthorGraph, VideoEdge, VideoGraph,
    WeightVariant, DEFAULT_ETA, MIN_DT_DAYS,
};
pub use influence::{influence_indices, meme_zetas, AuthorInfluence, InfluenceRecord, Zeta};
pub use originality::{originality_index, Originality, ORIGINALITY_WINDOW_S};
pub use stats::{gini, power_law_fit, zipf_fit, PowerLawFit};
