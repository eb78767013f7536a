//! Early-dynamics prediction of meme volume and lifespan.

pub mod eval;
pub mod features;
pub mod filter;
pub mod metrics;
pub mod svr;

pub use eval::{
    evaluate, grid_search, load_feature_table, save_feature_table, write_reports_csv, EvalParams, EvalReport,
    FeatureSet, FeatureSidecar, Grid, KernelSpec, MeanStd, SplitResult, Standardizer, Target, MIN_TEST_ROWS,
    MIN_TRAIN_ROWS,
};
pub use features::{
    aggregate, assemble_features, truncate_cluster, AssembleParams, Block, BlockSpan, FeatureInputs, FeatureSchema,
    FeatureTable, MemeFeatureRow, MIN_VIDEOS,
};
pub use filter::{filter_features, select_columns, MIN_CORR};
pub use metrics::{kendall_tau, mse, pearson};
pub use svr::{train, Kernel, SvrModel, SvrParams};
