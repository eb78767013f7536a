//! Seeded synthetic data used by the demo corpus, tests and benchmarks.

pub mod cascade;
pub mod features;
pub mod images;
pub mod topics;
