//! Pipeline configuration: a flat key-value TOML file whose keys mirror the
//! command-line flags. Flags override file values.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use vmeme::imgproc::PrepOptions;
use vmeme::memedetect::{IndexParams, DEFAULT_KNN, DEFAULT_TAU};
use vmeme::memegraph::{WeightVariant, DEFAULT_ETA};
use vmeme::predict::{AssembleParams, EvalParams, MIN_VIDEOS};
use vmeme::topics::{LdaParams, DEFAULT_MEME_TERMS};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    pub threads: usize,
    pub manifest: Option<PathBuf>,
    /// Labelled keyframe pairs for detection evaluation.
    pub labels: Option<PathBuf>,

    pub blank_entropy: f64,
    pub border_var: f64,
    pub shot_threshold: f64,
    pub clip_limit: f64,
    pub tiles: u32,

    pub knn: usize,
    pub budget: Option<usize>,
    pub tau: f64,
    /// Threshold grid for the operating curve.
    pub tau_grid: Vec<f64>,

    pub eta: f64,
    pub weight_variant: WeightVariant,

    pub vocab_size: usize,
    pub meme_terms: usize,
    pub topics: usize,
    pub lda_iters: usize,

    pub delta_days: f64,
    pub min_videos: usize,
    /// Author-graph snapshot spacing in days; absent means one per meme.
    pub author_snapshot_days: Option<f64>,
    pub splits: usize,
    pub feature_sets: Vec<String>,
    pub targets: Vec<String>,
}

impl Default for Config {
    fn default() -> Self {
        let prep = PrepOptions::default();
        Config {
            seed: 0,
            threads: 0,
            manifest: None,
            labels: None,
            blank_entropy: prep.blank_entropy,
            border_var: prep.border_var,
            shot_threshold: 0.5,
            clip_limit: prep.clip_limit,
            tiles: prep.tiles,
            knn: DEFAULT_KNN,
            budget: None,
            tau: DEFAULT_TAU,
            tau_grid: (1..=40).map(|i| i as f64 * 0.5).collect(),
            eta: DEFAULT_ETA,
            weight_variant: WeightVariant::Star,
            vocab_size: 2000,
            meme_terms: DEFAULT_MEME_TERMS,
            topics: 50,
            lda_iters: 100,
            delta_days: 1.0,
            min_videos: MIN_VIDEOS,
            author_snapshot_days: None,
            splits: 5,
            feature_sets: vmeme::predict::FeatureSet::NAMED.iter().map(|s| s.to_string()).collect(),
            targets: vec!["volume".into(), "lifespan".into()],
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&raw).with_context(|| format!("parsing config {}", path.display()))
    }

    /// The workspace config if present, else defaults.
    pub fn load_or_default(path: &Path) -> Result<Self> {
        if path.exists() {
            Self::load(path)
        } else {
            Ok(Self::default())
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn prep(&self) -> PrepOptions {
        PrepOptions {
            blank_entropy: self.blank_entropy,
            border_var: self.border_var,
            clip_limit: self.clip_limit,
            tiles: self.tiles,
            ..PrepOptions::default()
        }
    }

    pub fn index(&self) -> IndexParams {
        IndexParams {
            budget: self.budget,
            knn: self.knn,
            seed: self.seed,
            ..IndexParams::default()
        }
    }

    pub fn lda(&self) -> LdaParams {
        LdaParams {
            k: self.topics,
            max_iters: self.lda_iters,
            seed: self.seed,
            ..LdaParams::default()
        }
    }

    pub fn assemble(&self) -> AssembleParams {
        AssembleParams {
            delta_days: self.delta_days,
            min_videos: self.min_videos,
            eta: self.eta,
            weight_variant: self.weight_variant,
            author_snapshot_days: self.author_snapshot_days,
        }
    }

    pub fn eval(&self) -> EvalParams {
        EvalParams {
            splits: self.splits,
            seed: self.seed,
            ..EvalParams::default()
        }
    }
}
