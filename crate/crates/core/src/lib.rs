//! Visual meme tracking for event-scoped video corpora.
//!
//! The crate is organised by pipeline stage:
//!
//! * [`corpus`] ingests a JSON Lines manifest, normalises titles and
//!   descriptions and builds the tf-idf ranked text vocabulary.
//! * [`imgproc`] segments decoded frame sequences into shots and prepares
//!   keyframes (blank rejection, border removal, aspect normalisation,
//!   median denoising, contrast-limited equalisation).
//! * [`correlogram`] extracts the 332-d cross-layout HSV auto-correlogram.
//! * [`memedetect`] indexes features for approximate nearest-neighbour
//!   search, applies the query-adaptive threshold and closes matched pairs
//!   into meme clusters.
//! * [`topics`] fits a joint text + meme LDA model and scores cross-modal
//!   annotations.
//! * [`memegraph`] builds the video and author diffusion graphs, influence
//!   indices and centralities.
//! * [`predict`] assembles early-dynamics features and trains an
//!   epsilon-SVR for meme volume and lifespan.
//!
//! Data-parallel loops go through [`par`], which uses rayon when the
//! `parallel` feature is enabled and falls back to sequential iteration
//! otherwise.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod corpus;
pub mod correlogram;
mod error;
pub mod imgproc;
pub mod matrix;
pub mod memedetect;
pub mod memegraph;
pub mod par;
pub mod predict;
pub mod synth;
pub mod topics;

pub use error::{Error, Result};
pub use par::Exec;

/// Seconds per day, used wherever upload times are converted to day units.
pub const SECONDS_PER_DAY: f64 = 86_400.0;
