use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::cm2::{cm2_score, cooccur_score, median_sq_distance, modality_thetas, Cm2Query, ScoredTerm};
use super::lda::{fit_lda, LdaParams};
use super::vocab::{JointVocabulary, Modality};
use crate::corpus::BagOfWords;
use crate::par::Exec;
use crate::{Error, Result};

/// Additive smoothing applied before normalising scores.
pub const SMOOTHING: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TagLikelihood {
    pub total_log_prob: f64,
    pub scored: usize,
    /// Held-out tags that were not among the candidates.
    pub skipped: usize,
}

impl TagLikelihood {
    pub fn mean(&self) -> Option<f64> {
        (self.scored > 0).then(|| self.total_log_prob / self.scored as f64)
    }

    pub fn merge(&mut self, o: TagLikelihood) {
        self.total_log_prob += o.total_log_prob;
        self.scored += o.scored;
        self.skipped += o.skipped;
    }
}

/// Natural-log probability of each held-out tag under the smoothed,
/// normalised candidate scores.
pub fn tag_likelihood(scores: &[ScoredTerm], heldout: &[u32]) -> Result<TagLikelihood> {
    if scores.is_empty() {
        return Err(Error::Empty("candidate scores"));
    }
    if scores.iter().any(|s| !(s.score >= 0.0) || !s.score.is_finite()) {
        return Err(Error::InvalidInput("scores must be finite and non-negative".into()));
    }
    let z: f64 = scores.iter().map(|s| s.score).sum::<f64>() + SMOOTHING * scores.len() as f64;
    let mut out = TagLikelihood::default();
    for t in heldout {
        match scores.iter().find(|s| s.term == *t) {
            Some(s) => {
                out.total_log_prob += ((s.score + SMOOTHING) / z).ln();
                out.scored += 1;
            }
            None => out.skipped += 1,
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvParams {
    pub folds: usize,
    pub lda: LdaParams,
    pub seed: u64,
}

impl Default for CvParams {
    fn default() -> Self {
        CvParams {
            folds: 5,
            lda: LdaParams::default(),
            seed: 0,
        }
    }
}

/// Per-fold mean tag log-likelihoods of both scorers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub cm2: Vec<f64>,
    pub cooccur: Vec<f64>,
    pub queries: Vec<usize>,
}

pub fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (m, var.sqrt())
}

/// Meme-to-tag annotation benchmark.
///
/// Documents are shuffled into folds. For each held-out document with both
/// memes and words, its memes form the query and its distinct words are the
/// tags to predict from the training folds.
pub fn cross_validate(exec: Exec, vocab: &JointVocabulary, docs: &[BagOfWords], params: &CvParams) -> Result<CvReport> {
    if params.folds < 2 {
        return Err(Error::InvalidInput("cross-validation needs at least 2 folds".into()));
    }
    let mut order: Vec<usize> = (0..docs.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(params.seed));
    let mut fold_of = vec![0; docs.len()];
    for (pos, &d) in order.iter().enumerate() {
        fold_of[d] = pos % params.folds;
    }
    let mut report = CvReport {
        cm2: Vec::new(),
        cooccur: Vec::new(),
        queries: Vec::new(),
    };
    let text = vocab.range(Modality::Text);
    let meme = vocab.range(Modality::Meme);
    for f in 0..params.folds {
        let train: Vec<BagOfWords> = (0..docs.len()).filter(|&d| fold_of[d] != f).map(|d| docs[d].clone()).collect();
        let (model, _) = fit_lda(exec, &train, vocab.len(), &params.lda)?;
        let thetas = modality_thetas(exec, &model, vocab, &train, Modality::Meme);
        let sigma = median_sq_distance(&thetas, params.seed);
        let mut a = TagLikelihood::default();
        let mut b = TagLikelihood::default();
        let mut queries = 0;
        for d in (0..docs.len()).filter(|&d| fold_of[d] == f) {
            let terms: Vec<u32> = docs[d].counts.keys().copied().filter(|&t| meme.contains(&(t as usize))).collect();
            let tags: Vec<u32> = docs[d].counts.keys().copied().filter(|&t| text.contains(&(t as usize))).collect();
            if terms.is_empty() || tags.is_empty() {
                continue;
            }
            let q = Cm2Query {
                terms,
                candidate: Modality::Text,
                sigma: Some(sigma),
            };
            a.merge(tag_likelihood(&cm2_score(&model, vocab, &train, &thetas, &q)?, &tags)?);
            b.merge(tag_likelihood(&cooccur_score(vocab, &train, &q)?, &tags)?);
            queries += 1;
        }
        if let (Some(x), Some(y)) = (a.mean(), b.mean()) {
            report.cm2.push(x);
            report.cooccur.push(y);
            report.queries.push(queries);
        }
    }
    if report.cm2.is_empty() {
        return Err(Error::Empty("held-out documents with both memes and words"));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_scores_give_log_one_over_v() {
        let s: Vec<ScoredTerm> = (0..8).map(|t| ScoredTerm { term: t, score: 3.0 }).collect();
        let l = tag_likelihood(&s, &[1, 5, 99]).unwrap();
        assert_eq!(l.scored, 2);
        assert_eq!(l.skipped, 1);
        assert!((l.mean().unwrap() - (1.0f64 / 8.0).ln()).abs() < 1e-12);
    }

    #[test]
    fn zero_score_tag_stays_finite() {
        let s = vec![ScoredTerm { term: 0, score: 1.0 }, ScoredTerm { term: 1, score: 0.0 }];
        let l = tag_likelihood(&s, &[1]).unwrap();
        assert!(l.total_log_prob.is_finite() && l.total_log_prob < -20.0);
    }

    #[test]
    fn mean_and_sample_std() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]);
        assert_eq!((m, s), (2.0, 1.0));
    }
}
