use serde::{Deserialize, Serialize};

use super::distance::{norm, Neighbor};
use super::index::AnnIndex;
use crate::correlogram::CollectionMaxFeature;
use crate::par::{self, Exec};
use crate::{Error, Result};

/// An unordered near-duplicate pair stored with `a < b`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchPair {
    pub a: u32,
    pub b: u32,
    pub distance: f64,
}

/// Query-adaptive threshold `tau * |f_q| / |f_max|`.
pub fn query_threshold(fq_norm: f64, fmax_norm: f64, tau: f64) -> Result<f64> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::InvalidInput(format!("tau must be positive, got {tau}")));
    }
    if !fq_norm.is_finite() || !fmax_norm.is_finite() || fq_norm < 0.0 {
        return Err(Error::InvalidInput("feature norms must be finite".into()));
    }
    if fmax_norm == 0.0 {
        return Err(Error::Undefined("collection max feature has zero norm"));
    }
    Ok(tau * fq_norm / fmax_norm)
}

/// Per-row neighbour lists plus the norm ratio used to scale thresholds.
///
/// Retrieval is independent of `tau`, so one candidate set serves a whole
/// threshold sweep.
#[derive(Clone, Debug)]
pub struct Candidates {
    pub neighbors: Vec<Vec<Neighbor>>,
    pub norm_ratio: Vec<f64>,
}

pub fn candidates(exec: Exec, index: &AnnIndex, fmax: &CollectionMaxFeature, k: usize) -> Result<Candidates> {
    let fmax_norm = fmax.l2_norm();
    if fmax_norm == 0.0 {
        return Err(Error::Undefined("collection max feature has zero norm"));
    }
    if fmax.values.len() != index.dim() {
        return Err(Error::DimensionMismatch {
            expected: index.dim(),
            found: fmax.values.len(),
        });
    }
    let neighbors = par::map_range(exec, index.len(), |i| index.query_row(i, k));
    let norm_ratio = (0..index.len()).map(|i| norm(index.data().row(i)) / fmax_norm).collect();
    Ok(Candidates { neighbors, norm_ratio })
}

impl Candidates {
    /// Pairs within `tau`-scaled thresholds, canonical and deduplicated.
    pub fn pairs(&self, tau: f64) -> Result<Vec<MatchPair>> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::InvalidInput(format!("tau must be positive, got {tau}")));
        }
        let mut out = Vec::new();
        for (q, list) in self.neighbors.iter().enumerate() {
            let t = tau * self.norm_ratio[q];
            for n in list {
                if n.distance <= t && n.index as usize != q {
                    let (a, b) = if (q as u32) < n.index { (q as u32, n.index) } else { (n.index, q as u32) };
                    out.push(MatchPair {
                        a,
                        b,
                        distance: n.distance,
                    });
                }
            }
        }
        out.sort_by_key(|p| (p.a, p.b));
        out.dedup_by(|x, y| x.a == y.a && x.b == y.b);
        Ok(out)
    }
}

pub fn match_all(exec: Exec, index: &AnnIndex, fmax: &CollectionMaxFeature, tau: f64, k: usize) -> Result<Vec<MatchPair>> {
    query_threshold(1.0, 1.0, tau)?;
    candidates(exec, index, fmax, k)?.pairs(tau)
}
