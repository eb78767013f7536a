use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::matching::{Candidates, MatchPair};
use super::unionfind::components;
use crate::imgproc::FrameRef;
use crate::par::{self, Exec};
use crate::{Error, Result};

/// A human judgement on a pair of keyframes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledPair {
    pub a: FrameRef,
    pub b: FrameRef,
    pub duplicate: bool,
}

/// A labelled pair expressed in feature-row space.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RowLabel {
    pub a: u32,
    pub b: u32,
    pub duplicate: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub true_pos: usize,
    pub false_pos: usize,
    pub false_neg: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub tau: f64,
    #[serde(flatten)]
    pub prf: Prf,
}

/// How predictions are read: same-cluster membership or direct pairs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvalMode {
    Cluster,
    Pair,
}

pub fn resolve_labels(labels: &[LabeledPair], frames: &[FrameRef]) -> Result<Vec<RowLabel>> {
    let index: HashMap<&FrameRef, u32> = frames.iter().enumerate().map(|(i, f)| (f, i as u32)).collect();
    let row = |f: &FrameRef| {
        index
            .get(f)
            .copied()
            .ok_or_else(|| Error::UnknownRef(format!("labelled frame {}#{} not in collection", f.video_id, f.shot)))
    };
    labels
        .iter()
        .map(|l| {
            Ok(RowLabel {
                a: row(&l.a)?,
                b: row(&l.b)?,
                duplicate: l.duplicate,
            })
        })
        .collect()
}

/// Precision, recall and F1 of `predicted` over the labelled pairs.
///
/// A detector that declares no labelled pair duplicate gets precision 1.
pub fn score(labels: &[RowLabel], predicted: impl Fn(u32, u32) -> bool) -> Result<Prf> {
    let positives = labels.iter().filter(|l| l.duplicate).count();
    if positives == 0 {
        return Err(Error::Undefined("recall needs at least one positive label"));
    }
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for l in labels {
        match (predicted(l.a, l.b), l.duplicate) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    let precision = if tp + fp == 0 { 1.0 } else { tp as f64 / (tp + fp) as f64 };
    let recall = tp as f64 / positives as f64;
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(Prf {
        precision,
        recall,
        f1,
        true_pos: tp,
        false_pos: fp,
        false_neg: fn_,
    })
}

pub fn evaluate_pairs(pairs: &[MatchPair], labels: &[RowLabel]) -> Result<Prf> {
    let set: std::collections::HashSet<(u32, u32)> = pairs.iter().map(|p| (p.a, p.b)).collect();
    score(labels, |a, b| set.contains(&(a.min(b), a.max(b))))
}

/// Scores same-component membership; `n` is the number of feature rows.
pub fn evaluate_clusters(n: usize, clusters: &[Vec<u32>], labels: &[RowLabel]) -> Result<Prf> {
    let mut owner = vec![u32::MAX; n];
    for (ci, c) in clusters.iter().enumerate() {
        for &m in c {
            owner[m as usize] = ci as u32;
        }
    }
    score(labels, |a, b| a != b && owner[a as usize] != u32::MAX && owner[a as usize] == owner[b as usize])
}

pub fn evaluate(mode: EvalMode, n: usize, pairs: &[MatchPair], labels: &[RowLabel]) -> Result<Prf> {
    match mode {
        EvalMode::Pair => evaluate_pairs(pairs, labels),
        EvalMode::Cluster => {
            let comps = components(n, pairs.iter().map(|p| (p.a, p.b)));
            evaluate_clusters(n, &comps, labels)
        }
    }
}

/// One operating point per `tau`, reusing a single candidate retrieval.
pub fn sweep(exec: Exec, cands: &Candidates, mode: EvalMode, labels: &[RowLabel], taus: &[f64]) -> Result<Vec<OperatingPoint>> {
    let n = cands.neighbors.len();
    par::try_map(exec, taus, |&tau| {
        let pairs = cands.pairs(tau)?;
        let prf = evaluate(mode, n, &pairs, labels)?;
        Ok(OperatingPoint { tau, prf })
    })
}

/// The point with the highest F1 (earliest on ties).
pub fn best_f1(points: &[OperatingPoint]) -> Option<OperatingPoint> {
    points.iter().copied().fold(None, |best: Option<OperatingPoint>, p| match best {
        Some(b) if b.prf.f1 >= p.prf.f1 => Some(b),
        _ => Some(p),
    })
}


#[cfg(test)]
mod tests {
    use super::*;

    fn lab(a: u32, b: u32, d: bool) -> RowLabel {
        RowLabel { a, b, duplicate: d }
    }

    #[test]
    fn perfect_detector() {
        let labels = [lab(0, 1, true), lab(1, 2, false), lab(2, 3, true)];
        let p = evaluate_clusters(4, &[vec![0, 1], vec![2, 3]], &labels).unwrap();
        assert_eq!((p.precision, p.recall, p.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn silent_detector_has_unit_precision_zero_recall() {
        let labels = [lab(0, 1, true), lab(1, 2, false)];
        let p = evaluate_pairs(&[], &labels).unwrap();
        assert_eq!((p.precision, p.recall, p.f1), (1.0, 0.0, 0.0));
    }

    #[test]
    fn no_positive_labels_is_an_error() {
        assert!(evaluate_pairs(&[], &[lab(0, 1, false)]).is_err());
    }

    #[test]
    fn f1_combines_p_and_r() {
        let labels = [lab(0, 1, true), lab(2, 3, true), lab(4, 5, false)];
        let pairs = [MatchPair { a: 0, b: 1, distance: 0.0 }, MatchPair { a: 4, b: 5, distance: 0.0 }];
        let p = evaluate_pairs(&pairs, &labels).unwrap();
        assert!((p.precision - 0.5).abs() < 1e-12 && (p.recall - 0.5).abs() < 1e-12);
        assert!((p.f1 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn cluster_mode_credits_transitive_pairs() {
        let labels = [lab(0, 2, true)];
        let pairs = [MatchPair { a: 0, b: 1, distance: 0.0 }, MatchPair { a: 1, b: 2, distance: 0.0 }];
        assert_eq!(evaluate(EvalMode::Pair, 3, &pairs, &labels).unwrap().recall, 0.0);
        assert_eq!(evaluate(EvalMode::Cluster, 3, &pairs, &labels).unwrap().recall, 1.0);
    }
}
