use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use crate::corpus::BagOfWords;

fn dirichlet(rng: &mut ChaCha8Rng, alpha: f64, k: usize) -> Vec<f64> {
    let g = Gamma::new(alpha, 1.0).expect("positive shape");
    let mut v: Vec<f64> = (0..k).map(|_| g.sample(rng).max(1e-300)).collect();
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}

fn draw(rng: &mut ChaCha8Rng, p: &[f64]) -> usize {
    let mut u = rng.random::<f64>();
    for (i, &x) in p.iter().enumerate() {
        if u < x {
            return i;
        }
        u -= x;
    }
    p.len() - 1
}

/// A corpus drawn from topics with disjoint, uniform word supports.
pub struct PlantedCorpus {
    pub docs: Vec<BagOfWords>,
    /// True topic-word distributions.
    pub phi: Vec<Vec<f64>>,
    pub vocab: usize,
}

pub fn planted_topics(docs: usize, k: usize, words_per_topic: usize, doc_len: usize, alpha: f64, seed: u64) -> PlantedCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocab = k * words_per_topic;
    let phi: Vec<Vec<f64>> = (0..k)
        .map(|t| {
            (0..vocab)
                .map(|w| if w / words_per_topic == t { 1.0 / words_per_topic as f64 } else { 0.0 })
                .collect()
        })
        .collect();
    let docs = (0..docs)
        .map(|d| {
            let theta = dirichlet(&mut rng, alpha, k);
            let mut counts = BTreeMap::new();
            for _ in 0..doc_len {
                let t = draw(&mut rng, &theta);
                let w = t * words_per_topic + rng.random_range(0..words_per_topic);
                *counts.entry(w as u32).or_insert(0) += 1;
            }
            BagOfWords {
                doc_id: format!("d{d}"),
                counts,
            }
        })
        .collect();
    PlantedCorpus { docs, phi, vocab }
}

/// Corpus where memes and words are linked through shared topics.
///
/// Every document belongs to one theme and mixes a few of that theme's
/// memes with a few of its words. Memes are numerous and individually rare,
/// so most meme/word pairs of a theme never co-occur directly.
pub struct CrossModalCorpus {
    pub docs: Vec<BagOfWords>,
    pub text_terms: usize,
    pub meme_terms: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct CrossModalSpec {
    pub docs: usize,
    pub themes: usize,
    pub words_per_theme: usize,
    pub memes_per_theme: usize,
    pub words_per_doc: usize,
    pub memes_per_doc: usize,
}

impl Default for CrossModalSpec {
    fn default() -> Self {
        CrossModalSpec {
            docs: 1000,
            themes: 5,
            words_per_theme: 30,
            memes_per_theme: 100,
            words_per_doc: 5,
            memes_per_doc: 2,
        }
    }
}

/// Term layout: all words first, then all memes.
pub fn cross_modal(spec: CrossModalSpec, seed: u64) -> CrossModalCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let text_terms = spec.themes * spec.words_per_theme;
    let meme_terms = spec.themes * spec.memes_per_theme;
    let docs = (0..spec.docs)
        .map(|d| {
            let theme = rng.random_range(0..spec.themes);
            let mut counts = BTreeMap::new();
            for _ in 0..spec.words_per_doc {
                let w = theme * spec.words_per_theme + rng.random_range(0..spec.words_per_theme);
                *counts.entry(w as u32).or_insert(0) += 1;
            }
            for _ in 0..spec.memes_per_doc {
                let m = text_terms + theme * spec.memes_per_theme + rng.random_range(0..spec.memes_per_theme);
                *counts.entry(m as u32).or_insert(0) += 1;
            }
            BagOfWords {
                doc_id: format!("d{d}"),
                counts,
            }
        })
        .collect();
    CrossModalCorpus {
        docs,
        text_terms,
        meme_terms,
    }
}
