use super::metrics::pearson;
use crate::{Error, Result};

/// Default absolute-correlation floor.
pub const MIN_CORR: f64 = 0.03;

/// Indices of columns whose absolute Pearson correlation with `target`
/// reaches `min_corr`.
pub fn filter_features(x: &[Vec<f64>], target: &[f64], min_corr: f64) -> Result<Vec<usize>> {
    if x.len() < 2 {
        return Err(Error::InvalidInput("column filter needs at least 2 rows".into()));
    }
    if x.len() != target.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: target.len(),
        });
    }
    let cols = x[0].len();
    let mut col = vec![0.0; x.len()];
    let kept: Vec<usize> = (0..cols)
        .filter(|&j| {
            for (c, row) in col.iter_mut().zip(x) {
                *c = row[j];
            }
            pearson(&col, target).abs() >= min_corr
        })
        .collect();
    if kept.is_empty() {
        return Err(Error::Empty("feature columns after correlation filter"));
    }
    Ok(kept)
}

pub fn select_columns(x: &[Vec<f64>], cols: &[usize]) -> Vec<Vec<f64>> {
    x.iter().map(|r| cols.iter().map(|&c| r[c]).collect()).collect()
}
