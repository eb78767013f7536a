//! Approximate nearest-neighbour index with automatic structure selection.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::distance::{sq_dist, Neighbor, ResultSet};
use super::kdforest::KdForest;
use super::kmeans_tree::KMeansTree;
use crate::matrix::Matrix;
use crate::par::{self, Exec};
use crate::{Error, Result};

/// Default cap on neighbours retrieved per query.
pub const DEFAULT_KNN: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IndexKind {
    KdForest,
    KmeansTree,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IndexChoice {
    Auto,
    Fixed(IndexKind),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexParams {
    pub choice: IndexChoice,
    pub trees: usize,
    pub leaf_size: usize,
    pub branching: usize,
    pub kmeans_iterations: usize,
    /// Candidate budget; `None` means `round(sqrt(N))`.
    pub budget: Option<usize>,
    pub knn: usize,
    pub seed: u64,
    /// Fraction of rows used as probe queries during auto-selection.
    pub probe_fraction: f64,
}

impl Default for IndexParams {
    fn default() -> Self {
        IndexParams {
            choice: IndexChoice::Auto,
            trees: 4,
            leaf_size: 1,
            branching: 16,
            kmeans_iterations: 11,
            budget: None,
            knn: DEFAULT_KNN,
            seed: 0,
            probe_fraction: 0.01,
        }
    }
}

/// Recall measured for each candidate structure during auto-selection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub queries: usize,
    pub kd_forest_recall: f64,
    pub kmeans_tree_recall: f64,
}

#[derive(Clone, Debug)]
enum Structure {
    Kd(KdForest),
    KMeans(KMeansTree),
}

#[derive(Clone, Debug)]
pub struct AnnIndex {
    data: Matrix,
    structure: Structure,
    budget: usize,
    knn: usize,
    probe: Option<ProbeReport>,
}

/// `round(sqrt(n))`, at least 1.
pub fn default_budget(n: usize) -> usize {
    ((n as f64).sqrt().round() as usize).max(1)
}

/// Exhaustive k nearest neighbours of `query`.
pub fn exact_knn(data: &Matrix, query: &[f32], k: usize, exclude: Option<u32>) -> Vec<Neighbor> {
    let mut r = ResultSet::new(k);
    for (i, row) in data.iter_rows().enumerate() {
        if Some(i as u32) != exclude {
            r.add(sq_dist(query, row), i as u32);
        }
    }
    r.into_neighbors()
}

impl AnnIndex {
    pub fn build(exec: Exec, data: Matrix, params: &IndexParams) -> Result<Self> {
        if data.rows() < 2 {
            return Err(Error::InvalidInput(format!("an index needs at least 2 features, got {}", data.rows())));
        }
        if data.cols() == 0 {
            return Err(Error::DimensionMismatch { expected: 1, found: 0 });
        }
        let budget = params.budget.unwrap_or_else(|| default_budget(data.rows())).max(1);
        let kd = || Structure::Kd(KdForest::build(&data, params.trees, params.leaf_size, params.seed));
        let km = || {
            Structure::KMeans(KMeansTree::build(
                &data,
                params.branching,
                params.kmeans_iterations,
                params.seed,
            ))
        };
        let (structure, probe) = match params.choice {
            IndexChoice::Fixed(IndexKind::KdForest) => (kd(), None),
            IndexChoice::Fixed(IndexKind::KmeansTree) => (km(), None),
            IndexChoice::Auto if budget >= data.rows() => (kd(), None),
            IndexChoice::Auto => {
                let a = kd();
                let b = km();
                let queries = probe_queries(data.rows(), params.probe_fraction, params.seed);
                let k = 10.min(data.rows() - 1);
                let ra = probe_recall(exec, &data, &a, &queries, k, budget);
                let rb = probe_recall(exec, &data, &b, &queries, k, budget);
                log::info!("index probe: kd-forest recall {ra:.3}, kmeans-tree recall {rb:.3}");
                let report = ProbeReport {
                    queries: queries.len(),
                    kd_forest_recall: ra,
                    kmeans_tree_recall: rb,
                };
                (if rb > ra { b } else { a }, Some(report))
            }
        };
        Ok(AnnIndex {
            data,
            structure,
            budget,
            knn: params.knn,
            probe,
        })
    }

    pub fn kind(&self) -> IndexKind {
        match self.structure {
            Structure::Kd(_) => IndexKind::KdForest,
            Structure::KMeans(_) => IndexKind::KmeansTree,
        }
    }

    pub fn len(&self) -> usize {
        self.data.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.data.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.data.cols()
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn knn_cap(&self) -> usize {
        self.knn
    }

    pub fn data(&self) -> &Matrix {
        &self.data
    }

    pub fn probe(&self) -> Option<&ProbeReport> {
        self.probe.as_ref()
    }

    /// Up to `k` neighbours of `query`, sorted by distance then row.
    ///
    /// When the budget covers the whole collection the search is exhaustive.
    pub fn query(&self, query: &[f32], k: usize, exclude: Option<u32>) -> Result<Vec<Neighbor>> {
        if query.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: query.len(),
            });
        }
        Ok(self.search(query, k, exclude))
    }

    /// Neighbours of indexed row `row`, itself excluded.
    pub fn query_row(&self, row: usize, k: usize) -> Vec<Neighbor> {
        self.search(self.data.row(row), k, Some(row as u32))
    }

    fn search(&self, query: &[f32], k: usize, exclude: Option<u32>) -> Vec<Neighbor> {
        if self.budget >= self.len() {
            return exact_knn(&self.data, query, k, exclude);
        }
        match &self.structure {
            Structure::Kd(f) => f.knn(&self.data, query, k, self.budget, exclude),
            Structure::KMeans(t) => t.knn(&self.data, query, k, self.budget, exclude),
        }
    }
}

fn probe_queries(n: usize, fraction: f64, seed: u64) -> Vec<usize> {
    let want = ((n as f64 * fraction).ceil() as usize).clamp(10.min(n), 500.min(n));
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut q = sample(&mut rng, n, want).into_vec();
    q.sort_unstable();
    q
}

fn probe_recall(exec: Exec, data: &Matrix, s: &Structure, queries: &[usize], k: usize, budget: usize) -> f64 {
    let hits = par::map(exec, queries, |&q| {
        let row = data.row(q);
        let truth = exact_knn(data, row, k, Some(q as u32));
        let got = match s {
            Structure::Kd(f) => f.knn(data, row, k, budget, Some(q as u32)),
            Structure::KMeans(t) => t.knn(data, row, k, budget, Some(q as u32)),
        };
        let got: std::collections::HashSet<u32> = got.iter().map(|n| n.index).collect();
        truth.iter().filter(|n| got.contains(&n.index)).count()
    });
    let total = queries.len() * k;
    if total == 0 {
        1.0
    } else {
        hits.iter().sum::<usize>() as f64 / total as f64
    }
}
