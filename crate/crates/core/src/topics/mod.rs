//! Joint text and meme topic model, and cross-modal annotation.
//!
//! Each video becomes one document over a vocabulary holding both its
//! normalised words and the memes it contains. A variational LDA fit on
//! these documents places both modalities in one topic space, where
//! [`cm2_score`] ranks terms of one modality for a query in the other.

mod cm2;
mod io;
mod lda;
mod likelihood;
mod vocab;

pub use cm2::{cm2_score, cooccur_score, kernel_votes, median_sq_distance, modality_thetas, Cm2Query, ScoredTerm};
pub use io::{load_model, save_model, ModelMeta};
pub use lda::{fit_lda, FitReport, LdaParams, TopicModel};
pub use likelihood::{cross_validate, mean_std, tag_likelihood, CvParams, CvReport, TagLikelihood, SMOOTHING};
pub use vocab::{JointVocabulary, Modality, DEFAULT_MEME_TERMS};
