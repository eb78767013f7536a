//! Repeated random-split evaluation of meme volume and lifespan regressors.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::{Block, FeatureSchema, FeatureTable, MemeFeatureRow};
use super::filter::{filter_features, select_columns, MIN_CORR};
use super::metrics::{kendall_tau, mse, pearson};
use super::svr::{train_with_kernel, Gram, Kernel, SvrModel, SvrParams};
use crate::matrix::Matrix;
use crate::par::{self, Exec};
use crate::{Error, Result};

/// Smallest test split the protocol accepts.
pub const MIN_TEST_ROWS: usize = 5;
/// Smallest training split the protocol accepts.
pub const MIN_TRAIN_ROWS: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Volume,
    Lifespan,
}

impl Target {
    pub fn of(self, row: &MemeFeatureRow) -> f64 {
        match self {
            Target::Volume => row.log_volume,
            Target::Lifespan => row.log_lifespan,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Target::Volume => "volume",
            Target::Lifespan => "lifespan",
        }
    }
}

impl FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "volume" => Ok(Target::Volume),
            "lifespan" | "life" => Ok(Target::Lifespan),
            _ => Err(Error::InvalidInput(format!("unknown target `{s}`"))),
        }
    }
}

/// A named union of feature blocks such as `net+txt+vmeme`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSet {
    pub name: String,
    pub blocks: Vec<Block>,
}

impl FeatureSet {
    /// The sets reported by default, from structural to content features.
    pub const NAMED: [&'static str; 7] = [
        "volume-d1",
        "connectivity",
        "influence",
        "net-all",
        "txt",
        "txt+vmeme",
        "net+txt+vmeme",
    ];

    pub fn named() -> Vec<FeatureSet> {
        Self::NAMED.iter().map(|n| n.parse().expect("built-in set")).collect()
    }

    pub fn columns(&self, schema: &FeatureSchema) -> Vec<usize> {
        schema.columns(&self.blocks)
    }
}

impl FromStr for FeatureSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut blocks = Vec::new();
        for part in s.split('+') {
            let add: &[Block] = match part.trim() {
                "volume" | "volume-d1" => &[Block::Volume],
                "conn" | "connectivity" => &[Block::Connectivity],
                "infl" | "influence" => &[Block::Influence],
                "net" | "net-all" => &[Block::Volume, Block::Connectivity, Block::Influence],
                "txt" => &[Block::Txt, Block::Presence],
                "vmeme" => &[Block::Vmeme, Block::Presence],
                "topic" => &[Block::Topic, Block::Presence],
                other => return Err(Error::InvalidInput(format!("unknown feature block `{other}`"))),
            };
            blocks.extend_from_slice(add);
        }
        blocks.sort();
        blocks.dedup();
        Ok(FeatureSet {
            name: s.to_string(),
            blocks,
        })
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// Kernel family; gammas are scaled by the inverse input dimension.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum KernelSpec {
    Linear,
    Poly { degree: u32 },
    Rbf { scale: f64 },
}

impl KernelSpec {
    pub fn resolve(self, dim: usize) -> Kernel {
        let g = 1.0 / dim.max(1) as f64;
        match self {
            KernelSpec::Linear => Kernel::Linear,
            KernelSpec::Poly { degree } => Kernel::Poly {
                degree,
                gamma: g,
                coef0: 1.0,
            },
            KernelSpec::Rbf { scale } => Kernel::Rbf { gamma: scale * g },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub c: Vec<f64>,
    pub epsilon: Vec<f64>,
    pub kernels: Vec<KernelSpec>,
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            c: vec![0.1, 1.0, 10.0],
            epsilon: vec![0.01, 0.1],
            kernels: vec![
                KernelSpec::Linear,
                KernelSpec::Poly { degree: 2 },
                KernelSpec::Poly { degree: 3 },
                KernelSpec::Rbf { scale: 0.1 },
                KernelSpec::Rbf { scale: 1.0 },
                KernelSpec::Rbf { scale: 10.0 },
            ],
        }
    }
}

impl Grid {
    fn points(&self) -> Vec<(KernelSpec, f64, f64)> {
        let mut out = Vec::new();
        for &k in &self.kernels {
            for &c in &self.c {
                for &e in &self.epsilon {
                    out.push((k, c, e));
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalParams {
    pub splits: usize,
    pub train_fraction: f64,
    pub inner_folds: usize,
    pub min_corr: f64,
    pub grid: Grid,
    pub seed: u64,
}

impl Default for EvalParams {
    fn default() -> Self {
        EvalParams {
            splits: 5,
            train_fraction: 0.5,
            inner_folds: 3,
            min_corr: MIN_CORR,
            grid: Grid::default(),
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Mean and sample standard deviation.
    pub fn of(xs: &[f64]) -> Self {
        let (m, s) = crate::topics::mean_std(xs);
        MeanStd { mean: m, std: s }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitResult {
    pub mse: f64,
    pub corr: f64,
    pub tau: f64,
    pub params: SvrParams,
    pub kept_columns: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub feature_set: String,
    pub target: Target,
    pub rows: usize,
    pub mse: MeanStd,
    pub corr: MeanStd,
    pub tau: MeanStd,
    pub splits: Vec<SplitResult>,
}

/// Column means and standard deviations from training rows; constant
/// columns get unit scale.
#[derive(Clone, Debug, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &[Vec<f64>]) -> Self {
        let d = x.first().map_or(0, Vec::len);
        let n = x.len().max(1) as f64;
        let mut mean = vec![0.0; d];
        for r in x {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v / n;
            }
        }
        let mut var = vec![0.0; d];
        for r in x {
            for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
                *s += (v - m) * (v - m) / n;
            }
        }
        let scale = var.into_iter().map(|v| if v > 1e-24 { v.sqrt() } else { 1.0 }).collect();
        Standardizer { mean, scale }
    }

    pub fn apply(&self, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
        x.iter()
            .map(|r| r.iter().zip(&self.mean).zip(&self.scale).map(|((v, m), s)| (v - m) / s).collect())
            .collect()
    }
}

fn take<T: Clone>(v: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&i| v[i].clone()).collect()
}

/// Mean validation MSE of one grid point over `folds` contiguous folds.
fn cv_error(gram: &Gram, x: &[Vec<f64>], y: &[f64], p: &SvrParams, folds: usize) -> f64 {
    let n = y.len();
    let mut total = 0.0;
    let mut used = 0;
    for f in 0..folds {
        let (lo, hi) = (f * n / folds, (f + 1) * n / folds);
        if hi <= lo {
            continue;
        }
        let train: Vec<usize> = (0..n).filter(|&i| i < lo || i >= hi).collect();
        let k = gram.subset(&train).kernel_matrix(p.kernel);
        let model = train_with_kernel(&take(x, &train), &take(y, &train), &k, p);
        let pred: Vec<f64> = (lo..hi).map(|i| model.predict(&x[i])).collect();
        total += mse(&pred, &y[lo..hi]);
        used += 1;
    }
    total / used.max(1) as f64
}

/// Picks the grid point with the lowest inner cross-validation error and
/// refits it on all of `x`.
pub fn grid_search(exec: Exec, x: &[Vec<f64>], y: &[f64], params: &EvalParams) -> Result<(SvrModel, SvrParams)> {
    let points = params.grid.points();
    if points.is_empty() {
        return Err(Error::Empty("hyper-parameter grid"));
    }
    let dim = x.first().map_or(0, Vec::len);
    let gram = Gram::new(x);
    let folds = params.inner_folds.clamp(2, y.len().max(2));
    let errors = par::map(exec, &points, |&(ks, c, epsilon)| {
        let p = SvrParams {
            c,
            epsilon,
            kernel: ks.resolve(dim),
            ..SvrParams::default()
        };
        cv_error(&gram, x, y, &p, folds)
    });
    let best = errors
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i)
        .expect("non-empty grid");
    let (ks, c, epsilon) = points[best];
    let p = SvrParams {
        c,
        epsilon,
        kernel: ks.resolve(dim),
        ..SvrParams::default()
    };
    Ok((train_with_kernel(x, y, &gram.kernel_matrix(p.kernel), &p), p))
}

/// Train/test split `s` of `n` rows.
pub fn split(n: usize, train_fraction: f64, seed: u64, s: usize) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(s as u64));
    idx.shuffle(&mut rng);
    let cut = ((n as f64 * train_fraction).round() as usize).min(n);
    let test = idx.split_off(cut);
    (idx, test)
}

pub fn evaluate(exec: Exec, table: &FeatureTable, set: &FeatureSet, target: Target, params: &EvalParams) -> Result<EvalReport> {
    let cols = set.columns(&table.schema);
    if cols.is_empty() {
        return Err(Error::Empty("feature columns in the requested set"));
    }
    let x: Vec<Vec<f64>> = table.rows.iter().map(|r| cols.iter().map(|&c| r.values[c]).collect()).collect();
    let y: Vec<f64> = table.rows.iter().map(|r| target.of(r)).collect();
    let n = y.len();
    let mut splits = Vec::with_capacity(params.splits);
    for s in 0..params.splits {
        let (train, test) = split(n, params.train_fraction, params.seed, s);
        if test.len() < MIN_TEST_ROWS || train.len() < MIN_TRAIN_ROWS {
            return Err(Error::InvalidInput(format!(
                "{n} memes leave {} training and {} test rows; at least {MIN_TRAIN_ROWS} and {MIN_TEST_ROWS} are needed",
                train.len(),
                test.len()
            )));
        }
        let std = Standardizer::fit(&take(&x, &train));
        let xtr = std.apply(&take(&x, &train));
        let xte = std.apply(&take(&x, &test));
        let ytr = take(&y, &train);
        let yte = take(&y, &test);
        let kept = filter_features(&xtr, &ytr, params.min_corr).unwrap_or_else(|_| (0..cols.len()).collect());
        let xtr = select_columns(&xtr, &kept);
        let xte = select_columns(&xte, &kept);
        let (model, chosen) = grid_search(exec, &xtr, &ytr, params)?;
        let pred: Vec<f64> = xte.iter().map(|r| model.predict(r)).collect();
        splits.push(SplitResult {
            mse: mse(&pred, &yte),
            corr: pearson(&pred, &yte),
            tau: kendall_tau(&pred, &yte),
            params: chosen,
            kept_columns: kept.len(),
        });
    }
    let col = |f: fn(&SplitResult) -> f64| MeanStd::of(&splits.iter().map(f).collect::<Vec<_>>());
    Ok(EvalReport {
        feature_set: set.name.clone(),
        target,
        rows: n,
        mse: col(|s| s.mse),
        corr: col(|s| s.corr),
        tau: col(|s| s.tau),
        splits,
    })
}

pub const REPORT_CSV_HEADER: &str = "feature_set,target,rows,mse_mean,mse_std,corr_mean,corr_std,tau_mean,tau_std";

pub fn write_reports_csv<W: Write>(mut w: W, reports: &[EvalReport]) -> std::io::Result<()> {
    writeln!(w, "{REPORT_CSV_HEADER}")?;
    for r in reports {
        writeln!(
            w,
            "{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
            r.feature_set,
            r.target.name(),
            r.rows,
            r.mse.mean,
            r.mse.std,
            r.corr.mean,
            r.corr.std,
            r.tau.mean,
            r.tau.std
        )?;
    }
    Ok(())
}

/// Sidecar describing a saved feature matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureSidecar {
    pub schema: FeatureSchema,
    pub meme_ids: Vec<u32>,
    pub log_volume: Vec<f64>,
    pub log_lifespan: Vec<f64>,
    pub pruned: Vec<u32>,
}

/// Writes `<stem>.vmf` (one row per meme) and `<stem>.json`.
pub fn save_feature_table(dir: &Path, stem: &str, table: &FeatureTable) -> Result<()> {
    let width = table.schema.width();
    let m = if table.rows.is_empty() {
        Matrix::zeros(0, width)
    } else {
        Matrix::from_f64_rows(&table.rows.iter().map(|r| r.values.clone()).collect::<Vec<_>>())?
    };
    m.save(&dir.join(format!("{stem}.vmf")))?;
    let side = FeatureSidecar {
        schema: table.schema.clone(),
        meme_ids: table.rows.iter().map(|r| r.meme_id).collect(),
        log_volume: table.rows.iter().map(|r| r.log_volume).collect(),
        log_lifespan: table.rows.iter().map(|r| r.log_lifespan).collect(),
        pruned: table.pruned.clone(),
    };
    let path = dir.join(format!("{stem}.json"));
    std::fs::write(&path, serde_json::to_string_pretty(&side)?).map_err(|e| Error::io(&path, e))
}

pub fn load_feature_table(dir: &Path, stem: &str) -> Result<FeatureTable> {
    let m = Matrix::load(&dir.join(format!("{stem}.vmf")))?;
    let path = dir.join(format!("{stem}.json"));
    let raw = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let side: FeatureSidecar = serde_json::from_str(&raw)?;
    if m.rows() != side.meme_ids.len() {
        return Err(Error::DimensionMismatch {
            expected: side.meme_ids.len(),
            found: m.rows(),
        });
    }
    if m.rows() > 0 && m.cols() != side.schema.width() {
        return Err(Error::DimensionMismatch {
            expected: side.schema.width(),
            found: m.cols(),
        });
    }
    let rows = (0..m.rows())
        .map(|i| MemeFeatureRow {
            meme_id: side.meme_ids[i],
            values: m.row(i).iter().map(|&v| v as f64).collect(),
            log_volume: side.log_volume[i],
            log_lifespan: side.log_lifespan[i],
        })
        .collect();
    Ok(FeatureTable {
        schema: side.schema,
        rows,
        pruned: side.pruned,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sets() {
        let s: FeatureSet = "net+txt+vmeme".parse().unwrap();
        assert_eq!(
            s.blocks,
            vec![
                Block::Volume,
                Block::Connectivity,
                Block::Influence,
                Block::Txt,
                Block::Vmeme,
                Block::Presence
            ]
        );
        assert!("net+bogus".parse::<FeatureSet>().is_err());
        assert_eq!(FeatureSet::named().len(), 7);
    }

    #[test]
    fn standardizer_uses_training_stats() {
        let s = Standardizer::fit(&[vec![1.0, 5.0], vec![3.0, 5.0]]);
        assert_eq!(s.mean, vec![2.0, 5.0]);
        assert_eq!(s.scale, vec![1.0, 1.0]);
        assert_eq!(s.apply(&[vec![4.0, 7.0]]), vec![vec![2.0, 2.0]]);
    }

    #[test]
    fn splits_partition() {
        let (a, b) = split(11, 0.5, 3, 1);
        let mut all: Vec<usize> = a.iter().chain(&b).copied().collect();
        all.sort();
        assert_eq!(all, (0..11).collect::<Vec<_>>());
        assert_eq!(split(11, 0.5, 3, 1), (a, b));
    }
}
