//! Cross-modal scoring: kernel-weighted voting in topic space and the plain
//! co-occurrence baseline.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::lda::TopicModel;
use super::vocab::{JointVocabulary, Modality};
use crate::corpus::BagOfWords;
use crate::par::{self, Exec};
use crate::{Error, Result};

/// Rows beyond which the bandwidth median is taken over a sample.
const MEDIAN_SAMPLE: usize = 2000;

#[derive(Clone, Debug, PartialEq)]
pub struct Cm2Query {
    /// Query terms, all from one modality.
    pub terms: Vec<u32>,
    pub candidate: Modality,
    /// Kernel bandwidth; `None` uses the training median.
    pub sigma: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredTerm {
    pub term: u32,
    pub score: f64,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Topic mixtures of `docs` inferred from one modality only.
pub fn modality_thetas(exec: Exec, model: &TopicModel, vocab: &JointVocabulary, docs: &[BagOfWords], m: Modality) -> Vec<Vec<f64>> {
    par::map(exec, docs, |d| model.infer_theta(&vocab.restrict(d, m)))
}

/// Median pairwise squared distance, over a seeded sample of at most 2000
/// rows. Falls back to the smallest positive distance, then 1.
pub fn median_sq_distance(thetas: &[Vec<f64>], seed: u64) -> f64 {
    let rows: Vec<&Vec<f64>> = if thetas.len() > MEDIAN_SAMPLE {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut idx = sample(&mut rng, thetas.len(), MEDIAN_SAMPLE).into_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| &thetas[i]).collect()
    } else {
        thetas.iter().collect()
    };
    let mut d = Vec::with_capacity(rows.len() * rows.len().saturating_sub(1) / 2);
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            d.push(sq_dist(rows[i], rows[j]));
        }
    }
    if d.is_empty() {
        return 1.0;
    }
    d.sort_by(f64::total_cmp);
    let n = d.len();
    let med = if n % 2 == 1 { d[n / 2] } else { 0.5 * (d[n / 2 - 1] + d[n / 2]) };
    if med > 0.0 {
        med
    } else {
        d.into_iter().find(|&x| x > 0.0).unwrap_or(1.0)
    }
}

fn check_query(vocab: &JointVocabulary, q: &Cm2Query) -> Result<Modality> {
    let first = *q.terms.first().ok_or(Error::Empty("query terms"))?;
    let m = vocab
        .modality(first)
        .ok_or_else(|| Error::UnknownRef(format!("query term {first} outside vocabulary")))?;
    for &t in &q.terms {
        if vocab.modality(t) != Some(m) {
            return Err(Error::InvalidInput("query terms must share one modality in the vocabulary".into()));
        }
    }
    if vocab.range(q.candidate).is_empty() {
        return Err(Error::Empty("candidate modality"));
    }
    Ok(m)
}

fn rank(mut scores: Vec<ScoredTerm>) -> Vec<ScoredTerm> {
    scores.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.term.cmp(&b.term)));
    scores
}

/// Kernel-weighted votes of candidate terms given a query mixture.
pub fn kernel_votes(theta_q: &[f64], thetas: &[Vec<f64>], docs: &[BagOfWords], candidates: std::ops::Range<usize>, sigma: f64) -> Vec<ScoredTerm> {
    let mut scores = vec![0.0; candidates.len()];
    for (d, th) in docs.iter().zip(thetas) {
        let w = (-sq_dist(theta_q, th) / sigma).exp();
        for (&t, &c) in d.counts.range(candidates.start as u32..candidates.end as u32) {
            scores[t as usize - candidates.start] += c as f64 * w;
        }
    }
    rank(
        scores
            .into_iter()
            .enumerate()
            .map(|(i, score)| ScoredTerm {
                term: (candidates.start + i) as u32,
                score,
            })
            .collect(),
    )
}

/// Ranks candidate-modality terms for `query` by topic-space voting.
///
/// `thetas[m]` must be the mixture of `docs[m]` inferred from the query
/// modality alone.
pub fn cm2_score(model: &TopicModel, vocab: &JointVocabulary, docs: &[BagOfWords], thetas: &[Vec<f64>], query: &Cm2Query) -> Result<Vec<ScoredTerm>> {
    check_query(vocab, query)?;
    if docs.len() != thetas.len() {
        return Err(Error::DimensionMismatch {
            expected: docs.len(),
            found: thetas.len(),
        });
    }
    let sigma = match query.sigma {
        Some(s) if s > 0.0 && s.is_finite() => s,
        Some(s) => return Err(Error::InvalidInput(format!("kernel bandwidth must be positive, got {s}"))),
        None => median_sq_distance(thetas, 0),
    };
    let qbag = BagOfWords {
        doc_id: "query".into(),
        counts: query.terms.iter().map(|&t| (t, 1)).collect(),
    };
    let theta_q = model.infer_theta(&qbag);
    Ok(kernel_votes(&theta_q, thetas, docs, vocab.range(query.candidate), sigma))
}

/// Co-occurrence baseline: each document votes its candidate counts times
/// the number of query terms it contains.
pub fn cooccur_score(vocab: &JointVocabulary, docs: &[BagOfWords], query: &Cm2Query) -> Result<Vec<ScoredTerm>> {
    check_query(vocab, query)?;
    let r = vocab.range(query.candidate);
    let mut scores = vec![0.0; r.len()];
    for d in docs {
        let hits = query.terms.iter().filter(|t| d.counts.contains_key(t)).count();
        if hits == 0 {
            continue;
        }
        for (&t, &c) in d.counts.range(r.start as u32..r.end as u32) {
            scores[t as usize - r.start] += c as f64 * hits as f64;
        }
    }
    Ok(rank(
        scores
            .into_iter()
            .enumerate()
            .map(|(i, score)| ScoredTerm {
                term: (r.start + i) as u32,
                score,
            })
            .collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn bag(words: &[(u32, u32)]) -> BagOfWords {
        BagOfWords {
            doc_id: "d".into(),
            counts: words.iter().copied().collect::<BTreeMap<_, _>>(),
        }
    }

    fn vocab() -> JointVocabulary {
        JointVocabulary::new(vec!["a".into(), "b".into(), "c".into()], vec![0, 1]).unwrap()
    }

    #[test]
    fn toy_kernel_votes_match_formula() {
        let docs = vec![bag(&[(0, 2), (3, 1)]), bag(&[(1, 1), (4, 1)]), bag(&[(0, 1), (2, 3)]), bag(&[(1, 2), (3, 1)])];
        let thetas = vec![vec![0.9, 0.1], vec![0.2, 0.8], vec![0.5, 0.5], vec![0.7, 0.3]];
        let q = [0.8, 0.2];
        let sigma = 0.5;
        let got = kernel_votes(&q, &thetas, &docs, 0..3, sigma);
        let w: Vec<f64> = thetas.iter().map(|t| (-sq_dist(&q, t) / sigma).exp()).collect();
        let want = [2.0 * w[0] + w[2], w[1] + 2.0 * w[3], 3.0 * w[2]];
        for s in &got {
            assert!((s.score - want[s.term as usize]).abs() < 1e-15);
        }
    }

    #[test]
    fn cooccurrence_with_single_supporting_doc_is_its_counts() {
        let docs = vec![bag(&[(0, 2), (2, 5), (3, 1)]), bag(&[(1, 9), (4, 1)])];
        let q = Cm2Query {
            terms: vec![3],
            candidate: Modality::Text,
            sigma: None,
        };
        let got = cooccur_score(&vocab(), &docs, &q).unwrap();
        assert_eq!(got.iter().map(|s| (s.term, s.score)).collect::<Vec<_>>(), vec![(2, 5.0), (0, 2.0), (1, 0.0)]);
    }

    #[test]
    fn absent_query_scores_zero() {
        let docs = vec![bag(&[(0, 2)])];
        let q = Cm2Query {
            terms: vec![4],
            candidate: Modality::Text,
            sigma: None,
        };
        assert!(cooccur_score(&vocab(), &docs, &q).unwrap().iter().all(|s| s.score == 0.0));
    }

    #[test]
    fn query_validation() {
        let v = vocab();
        let bad = |terms: Vec<u32>, candidate| Cm2Query {
            terms,
            candidate,
            sigma: None,
        };
        assert!(cooccur_score(&v, &[], &bad(vec![], Modality::Text)).is_err());
        assert!(cooccur_score(&v, &[], &bad(vec![9], Modality::Text)).is_err());
        assert!(cooccur_score(&v, &[], &bad(vec![0, 3], Modality::Text)).is_err());
        let text_only = JointVocabulary::new(vec!["a".into()], vec![]).unwrap();
        assert!(matches!(
            cooccur_score(&text_only, &[], &bad(vec![0], Modality::Meme)),
            Err(Error::Empty(_))
        ));
    }

    #[test]
    fn median_of_small_sets() {
        let t = vec![vec![0.0], vec![1.0], vec![3.0]];
        // distances 1, 9, 4
        assert_eq!(median_sq_distance(&t, 0), 4.0);
        assert_eq!(median_sq_distance(&[vec![0.5], vec![0.5]], 0), 1.0);
    }
}
