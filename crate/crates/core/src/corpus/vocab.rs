use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Corpus, Normalizer};
use crate::{Error, Result};

/// Normalised token lists, one per corpus video (title + description).
#[derive(Clone, Debug, PartialEq)]
pub struct TokenizedCorpus {
    pub docs: Vec<Vec<String>>,
}

impl TokenizedCorpus {
    pub fn new(corpus: &Corpus, normalizer: &Normalizer) -> Self {
        TokenizedCorpus {
            docs: corpus
                .videos()
                .iter()
                .map(|v| normalizer.normalize(&v.text()))
                .collect(),
        }
    }
}

/// Document frequencies from a background collection (e.g. several event
/// corpora monitored over the same period), used in place of the
/// within-corpus idf.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DocFreqTable {
    pub n_docs: u64,
    pub df: HashMap<String, u64>,
}

impl DocFreqTable {
    pub fn from_docs(docs: &[Vec<String>]) -> Self {
        let mut df: HashMap<String, u64> = HashMap::new();
        for d in docs {
            let uniq: HashSet<&String> = d.iter().collect();
            for t in uniq {
                *df.entry(t.clone()).or_default() += 1;
            }
        }
        DocFreqTable {
            n_docs: docs.len() as u64,
            df,
        }
    }

    /// Reads `#docs<TAB>N` followed by `term<TAB>df` lines.
    pub fn load(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut table = DocFreqTable::default();
        for (i, line) in raw.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let bad = || Error::Parse {
                line: i + 1,
                reason: format!("expected `term<TAB>count`, got {line:?}"),
            };
            let (term, count) = line.split_once('\t').ok_or_else(bad)?;
            let count: u64 = count.trim().parse().map_err(|_| bad())?;
            if term == "#docs" {
                table.n_docs = count;
            } else {
                table.df.insert(term.to_string(), count);
            }
        }
        Ok(table)
    }

    pub fn idf(&self, term: &str) -> f64 {
        let df = self.df.get(term).copied().unwrap_or(0);
        idf(self.n_docs, df)
    }
}

/// Smoothed inverse document frequency, `ln((1 + N) / (1 + df)) + 1`.
pub fn idf(n_docs: u64, df: u64) -> f64 {
    ((1.0 + n_docs as f64) / (1.0 + df as f64)).ln() + 1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TextVocabulary {
    terms: Vec<String>,
    idf: Vec<f64>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

/// Sparse term counts for one document.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BagOfWords {
    pub doc_id: String,
    pub counts: BTreeMap<u32, u32>,
}

impl BagOfWords {
    pub fn total(&self) -> u64 {
        self.counts.values().map(|&c| c as u64).sum()
    }
}

impl TextVocabulary {
    pub fn new(terms: Vec<String>, idf: Vec<f64>) -> Result<Self> {
        if terms.len() != idf.len() {
            return Err(Error::DimensionMismatch {
                expected: terms.len(),
                found: idf.len(),
            });
        }
        let index: HashMap<String, usize> =
            terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        if index.len() != terms.len() {
            return Err(Error::Conflict("vocabulary terms must be unique".into()));
        }
        if idf.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(Error::InvalidInput("idf values must be finite and positive".into()));
        }
        Ok(TextVocabulary { terms, idf, index })
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn bag(&self, doc_id: &str, tokens: &[String]) -> BagOfWords {
        let mut counts = BTreeMap::new();
        for t in tokens {
            if let Some(i) = self.index_of(t) {
                *counts.entry(i as u32).or_insert(0) += 1;
            }
        }
        BagOfWords {
            doc_id: doc_id.to_string(),
            counts,
        }
    }

    /// `term<TAB>idf` per line.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (t, v) in self.terms.iter().zip(&self.idf) {
            let _ = writeln!(out, "{t}\t{v}");
        }
        out
    }

    pub fn from_tsv(raw: &str) -> Result<Self> {
        let mut terms = Vec::new();
        let mut idf = Vec::new();
        for (i, line) in raw.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let bad = || Error::Parse {
                line: i + 1,
                reason: format!("expected `term<TAB>idf`, got {line:?}"),
            };
            let (t, v) = line.split_once('\t').ok_or_else(bad)?;
            terms.push(t.to_string());
            idf.push(v.parse().map_err(|_| bad())?);
        }
        TextVocabulary::new(terms, idf)
    }
}

/// Ranks terms by corpus tf-idf and keeps the top `cap`.
///
/// The score of a term is its total count over all documents times its
/// idf; idf comes from `background` when given, else from the corpus
/// itself. Equal scores are ordered lexicographically.
pub fn build_vocabulary(
    corpus: &TokenizedCorpus,
    cap: usize,
    background: Option<&DocFreqTable>,
) -> Result<TextVocabulary> {
    if corpus.docs.is_empty() {
        return Err(Error::Empty("corpus has no documents"));
    }
    if cap == 0 {
        return Err(Error::InvalidInput("vocabulary cap must be at least 1".into()));
    }
    let mut tf: HashMap<&str, u64> = HashMap::new();
    let mut df: HashMap<&str, u64> = HashMap::new();
    for doc in &corpus.docs {
        let mut seen = HashSet::new();
        for t in doc {
            *tf.entry(t).or_default() += 1;
            if seen.insert(t.as_str()) {
                *df.entry(t).or_default() += 1;
            }
        }
    }
    if tf.is_empty() {
        return Err(Error::Empty("corpus has no tokens"));
    }
    let n = corpus.docs.len() as u64;
    let mut scored: Vec<(&str, f64, f64)> = tf
        .iter()
        .map(|(&t, &count)| {
            let w = match background {
                Some(bg) => bg.idf(t),
                None => idf(n, df[t]),
            };
            (t, count as f64 * w, w)
        })
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    scored.truncate(cap);
    TextVocabulary::new(
        scored.iter().map(|s| s.0.to_string()).collect(),
        scored.iter().map(|s| s.2).collect(),
    )
}
