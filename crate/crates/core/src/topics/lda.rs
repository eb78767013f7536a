//! Variational EM for latent Dirichlet allocation with a symmetric,
//! estimated concentration parameter.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{digamma, ln_gamma};

use crate::corpus::BagOfWords;
use crate::par::{self, Exec};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LdaParams {
    pub k: usize,
    /// Initial concentration; `None` means `50 / k`.
    pub alpha: Option<f64>,
    pub estimate_alpha: bool,
    pub tol: f64,
    pub max_iters: usize,
    pub estep_tol: f64,
    pub estep_max_iters: usize,
    /// Relative strength of the random perturbation applied to the unigram
    /// distribution when initialising topics.
    pub init_noise: f64,
    pub seed: u64,
}

impl Default for LdaParams {
    fn default() -> Self {
        LdaParams {
            k: 50,
            alpha: None,
            estimate_alpha: true,
            tol: 1e-5,
            max_iters: 100,
            estep_tol: 1e-6,
            estep_max_iters: 100,
            init_noise: 1.0,
            seed: 0,
        }
    }
}

/// A fitted topic model.
#[derive(Clone, Debug, PartialEq)]
pub struct TopicModel {
    pub k: usize,
    pub alpha: f64,
    /// `k` rows over the vocabulary, each summing to one.
    pub phi: Vec<Vec<f64>>,
    /// Normalised variational Dirichlet of each training document.
    pub theta: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    /// Variational lower bound after each EM iteration.
    pub bounds: Vec<f64>,
    pub converged: bool,
    /// Documents with no in-vocabulary words.
    pub skipped: Vec<usize>,
}

impl FitReport {
    pub fn is_monotone(&self, slack: f64) -> bool {
        self.bounds.windows(2).all(|w| w[1] >= w[0] - slack * w[0].abs().max(1.0))
    }
}

type Words = Vec<(usize, f64)>;

fn doc_words(bag: &BagOfWords, vocab: usize) -> Words {
    bag.counts
        .iter()
        .filter(|(&w, &c)| (w as usize) < vocab && c > 0)
        .map(|(&w, &c)| (w as usize, c as f64))
        .collect()
}

struct EStep {
    gamma: Vec<f64>,
    bound: f64,
    elog_theta_sum: f64,
}

/// Coordinate ascent on one document's variational parameters.
///
/// `visit(word, count, phi_row)` sees the final per-word topic responsibilities.
fn estep(
    words: &Words,
    log_beta: &[Vec<f64>],
    alpha: f64,
    mut gamma: Vec<f64>,
    tol: f64,
    max_iters: usize,
    mut visit: impl FnMut(usize, f64, &[f64]),
) -> EStep {
    let k = log_beta.len();
    let mut phi = vec![0.0; words.len() * k];
    let mut dig = vec![0.0; k];
    for _ in 0..max_iters.max(1) {
        for (d, g) in dig.iter_mut().zip(&gamma) {
            *d = digamma(*g);
        }
        let mut next = vec![alpha; k];
        for (n, &(w, c)) in words.iter().enumerate() {
            let row = &mut phi[n * k..(n + 1) * k];
            let mut max = f64::NEG_INFINITY;
            for t in 0..k {
                row[t] = log_beta[t][w] + dig[t];
                max = max.max(row[t]);
            }
            if max == f64::NEG_INFINITY {
                row.iter_mut().for_each(|v| *v = 0.0);
                continue;
            }
            let mut z = 0.0;
            for v in row.iter_mut() {
                *v = (*v - max).exp();
                z += *v;
            }
            for (t, v) in row.iter_mut().enumerate() {
                *v /= z;
                next[t] += c * *v;
            }
        }
        let change = next
            .iter()
            .zip(&gamma)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        gamma = next;
        if change < tol {
            break;
        }
    }
    let gsum: f64 = gamma.iter().sum();
    let dsum = digamma(gsum);
    let elog: Vec<f64> = gamma.iter().map(|&g| digamma(g) - dsum).collect();
    let elog_theta_sum: f64 = elog.iter().sum();
    let mut bound = ln_gamma(k as f64 * alpha) - k as f64 * ln_gamma(alpha) + (alpha - 1.0) * elog_theta_sum
        - ln_gamma(gsum);
    for t in 0..k {
        bound += ln_gamma(gamma[t]) - (gamma[t] - 1.0) * elog[t];
    }
    for (n, &(w, c)) in words.iter().enumerate() {
        let row = &phi[n * k..(n + 1) * k];
        for t in 0..k {
            if row[t] > 0.0 {
                bound += c * row[t] * (elog[t] + log_beta[t][w] - row[t].ln());
            }
        }
        visit(w, c, row);
    }
    EStep {
        gamma,
        bound,
        elog_theta_sum,
    }
}

struct Acc {
    ss: Vec<Vec<f64>>,
    bound: f64,
    alpha_ss: f64,
    gammas: Vec<(usize, Vec<f64>)>,
}

pub fn fit_lda(exec: Exec, docs: &[BagOfWords], vocab: usize, params: &LdaParams) -> Result<(TopicModel, FitReport)> {
    let k = params.k;
    if k == 0 {
        return Err(Error::InvalidInput("topic count must be at least 1".into()));
    }
    if vocab == 0 {
        return Err(Error::Empty("vocabulary"));
    }
    let words: Vec<Words> = docs.iter().map(|d| doc_words(d, vocab)).collect();
    let mut report = FitReport::default();
    let active: Vec<usize> = (0..docs.len())
        .filter(|&i| {
            let keep = !words[i].is_empty();
            if !keep {
                log::warn!("document {} has no in-vocabulary words; skipped", docs[i].doc_id);
                report.skipped.push(i);
            }
            keep
        })
        .collect();
    if active.is_empty() {
        return Err(Error::Empty("corpus with in-vocabulary words"));
    }

    let mut unigram = vec![0.0; vocab];
    for &d in &active {
        for &(w, c) in &words[d] {
            unigram[w] += c;
        }
    }
    let total: f64 = unigram.iter().sum();
    unigram.iter_mut().for_each(|u| *u /= total);

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut beta: Vec<Vec<f64>> = (0..k)
        .map(|_| {
            let row: Vec<f64> = unigram
                .iter()
                .map(|&u| u * (1.0 + params.init_noise * rng.random::<f64>()))
                .collect();
            normalize(row)
        })
        .collect();
    if k == 1 {
        beta[0] = unigram.clone();
    }

    let mut alpha = params.alpha.unwrap_or(50.0 / k as f64);
    if !(alpha > 0.0) {
        return Err(Error::InvalidInput(format!("alpha must be positive, got {alpha}")));
    }
    let mut gammas: Vec<Vec<f64>> = words
        .iter()
        .map(|w| {
            let n: f64 = w.iter().map(|x| x.1).sum();
            vec![alpha + n / k as f64; k]
        })
        .collect();

    let chunk = (active.len() / (par::threads(exec) * 4).max(1)).clamp(16, 512);
    let mut prev = f64::NEG_INFINITY;
    for iter in 0..params.max_iters.max(1) {
        let log_beta: Vec<Vec<f64>> = beta.iter().map(|r| r.iter().map(|&b| b.ln()).collect()).collect();
        let acc = par::fold_chunks(
            exec,
            &active,
            chunk,
            || Acc {
                ss: Vec::new(),
                bound: 0.0,
                alpha_ss: 0.0,
                gammas: Vec::new(),
            },
            |acc, _, &d| {
                if acc.ss.is_empty() {
                    acc.ss = vec![vec![0.0; vocab]; k];
                }
                let ss = &mut acc.ss;
                let e = estep(
                    &words[d],
                    &log_beta,
                    alpha,
                    gammas[d].clone(),
                    params.estep_tol,
                    params.estep_max_iters,
                    |w, c, row| {
                        for (t, &p) in row.iter().enumerate() {
                            ss[t][w] += c * p;
                        }
                    },
                );
                acc.bound += e.bound;
                acc.alpha_ss += e.elog_theta_sum;
                acc.gammas.push((d, e.gamma));
            },
            |out, part| {
                if out.ss.is_empty() {
                    out.ss = part.ss;
                } else if !part.ss.is_empty() {
                    for (a, b) in out.ss.iter_mut().zip(&part.ss) {
                        for (x, y) in a.iter_mut().zip(b) {
                            *x += y;
                        }
                    }
                }
                out.bound += part.bound;
                out.alpha_ss += part.alpha_ss;
                out.gammas.extend(part.gammas);
            },
        );
        for (d, g) in acc.gammas {
            gammas[d] = g;
        }
        let bound = acc.bound;
        report.bounds.push(bound);
        log::debug!("lda iteration {iter}: bound {bound:.6} alpha {alpha:.5}");

        // M-step
        for (t, row) in acc.ss.into_iter().enumerate() {
            let s: f64 = row.iter().sum();
            beta[t] = if s > 0.0 { row.into_iter().map(|x| x / s).collect() } else { unigram.clone() };
        }
        if params.estimate_alpha {
            alpha = optimize_alpha(alpha, acc.alpha_ss, active.len(), k);
        }

        let converged = prev.is_finite() && ((bound - prev) / prev.abs()).abs() < params.tol;
        prev = bound;
        if converged {
            report.converged = true;
            break;
        }
    }

    let theta = gammas
        .iter()
        .enumerate()
        .map(|(d, g)| {
            if words[d].is_empty() {
                vec![1.0 / k as f64; k]
            } else {
                normalize(g.clone())
            }
        })
        .collect();
    Ok((
        TopicModel {
            k,
            alpha,
            phi: beta,
            theta,
        },
        report,
    ))
}

fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        v.iter_mut().for_each(|x| *x /= s);
    }
    v
}

fn alpha_objective(a: f64, ss: f64, d: usize, k: usize) -> f64 {
    d as f64 * (ln_gamma(k as f64 * a) - k as f64 * ln_gamma(a)) + (a - 1.0) * ss
}

/// Trigamma via recurrence and the asymptotic expansion.
pub(crate) fn trigamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 10.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let x2 = 1.0 / (x * x);
    acc + 1.0 / x + x2 / 2.0 + (1.0 / x) * x2 * (1.0 / 6.0 - x2 * (1.0 / 30.0 - x2 * (1.0 / 42.0 - x2 / 30.0)))
}

/// Newton's method on `log alpha`; falls back to the old value if the
/// objective would not improve.
fn optimize_alpha(start: f64, ss: f64, d: usize, k: usize) -> f64 {
    let kf = k as f64;
    let df = d as f64;
    let mut log_a = start.ln();
    for _ in 0..100 {
        let a = log_a.exp();
        if !a.is_finite() || a <= 0.0 {
            break;
        }
        let g = df * (kf * digamma(kf * a) - kf * digamma(a)) + ss;
        let h = df * (kf * kf * trigamma(kf * a) - kf * trigamma(a));
        let step = g / (h * a + g);
        if !step.is_finite() {
            break;
        }
        log_a -= step;
        if step.abs() < 1e-8 {
            break;
        }
    }
    let cand = log_a.exp().clamp(1e-6, 1e6);
    if cand.is_finite() && alpha_objective(cand, ss, d, k) >= alpha_objective(start, ss, d, k) {
        cand
    } else {
        start
    }
}

impl TopicModel {
    pub fn vocab_size(&self) -> usize {
        self.phi.first().map_or(0, Vec::len)
    }

    /// Posterior topic proportions for an unseen word multiset, holding the
    /// topics and `alpha` fixed. Out-of-vocabulary words are dropped; with
    /// nothing left the result is uniform.
    pub fn infer_theta(&self, bag: &BagOfWords) -> Vec<f64> {
        let words = doc_words(bag, self.vocab_size());
        if words.is_empty() {
            if !bag.counts.is_empty() {
                log::warn!("no in-vocabulary words in {}; uniform topic mix", bag.doc_id);
            }
            return vec![1.0 / self.k as f64; self.k];
        }
        let log_beta: Vec<Vec<f64>> = self.phi.iter().map(|r| r.iter().map(|&b| b.ln()).collect()).collect();
        let n: f64 = words.iter().map(|x| x.1).sum();
        let start = vec![self.alpha + n / self.k as f64; self.k];
        normalize(estep(&words, &log_beta, self.alpha, start, 1e-8, 500, |_, _, _| {}).gamma)
    }
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

    #[test]
    fn single_topic_is_unigram() {
        let docs = vec![bag(&[(0, 3), (1, 1)]), bag(&[(1, 2), (2, 2)])];
        let (m, _) = fit_lda(
            Exec::Sequential,
            &docs,
            3,
            &LdaParams {
                k: 1,
                ..Default::default()
            },
        )
        .unwrap();
        let want = [3.0 / 8.0, 3.0 / 8.0, 2.0 / 8.0];
        for (a, b) in m.phi[0].iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(m.theta.iter().all(|t| t == &vec![1.0]));
        assert_eq!(m.infer_theta(&bag(&[(0, 1)])), vec![1.0]);
    }

    #[test]
    fn empty_documents_are_skipped() {
        let docs = vec![bag(&[(0, 1)]), bag(&[(7, 1)]), bag(&[])];
        let (m, r) = fit_lda(
            Exec::Sequential,
            &docs,
            2,
            &LdaParams {
                k: 2,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(r.skipped, vec![1, 2]);
        assert_eq!(m.theta[2], vec![0.5, 0.5]);
    }

    #[test]
    fn uniform_theta_for_unknown_words() {
        let docs = vec![bag(&[(0, 2)]), bag(&[(1, 2)])];
        let (m, _) = fit_lda(Exec::Sequential, &docs, 2, &LdaParams { k: 3, ..Default::default() }).unwrap();
        let t = m.infer_theta(&bag(&[(99, 4)]));
        assert!(t.iter().all(|&x| (x - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn trigamma_values() {
        assert!((trigamma(1.0) - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-10);
        assert!((trigamma(0.5) - std::f64::consts::PI.powi(2) / 2.0).abs() < 1e-10);
    }

    #[test]
    fn rows_stay_on_simplex() {
        let docs: Vec<BagOfWords> = (0..30).map(|i| bag(&[(i % 6, 2), ((i * 7) % 6, 1)])).collect();
        let (m, r) = fit_lda(Exec::Sequential, &docs, 6, &LdaParams { k: 3, ..Default::default() }).unwrap();
        for row in &m.phi {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-8);
        }
        for t in &m.theta {
            assert!((t.iter().sum::<f64>() - 1.0).abs() < 1e-8);
        }
        assert!(r.is_monotone(1e-6));
    }
}
