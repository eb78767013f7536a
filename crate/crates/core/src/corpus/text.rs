use std::collections::{HashMap, HashSet};
use std::path::Path;

use crate::{Error, Result};

const DEFAULT_STOPWORDS: &str = include_str!("../../data/stopwords.txt");
const DEFAULT_DICTIONARY: &str = include_str!("../../data/normalization.tsv");

/// Lowercasing tokenizer with stopword removal and dictionary-based
/// morphological normalisation.
///
/// Tokens missing from the dictionary (proper names, foreign words,
/// abbreviations, misspellings) pass through unchanged apart from
/// lowercasing.
#[derive(Clone, Debug)]
pub struct Normalizer {
    dictionary: HashMap<String, String>,
    stopwords: HashSet<String>,
}

impl Default for Normalizer {
    fn default() -> Self {
        Normalizer::from_strs(DEFAULT_DICTIONARY, DEFAULT_STOPWORDS)
            .expect("shipped normalisation data is well formed")
    }
}

impl Normalizer {
    pub fn new(dictionary: HashMap<String, String>, stopwords: HashSet<String>) -> Self {
        let dictionary = dictionary
            .into_iter()
            .map(|(k, v)| (k.to_lowercase(), v.to_lowercase()))
            .collect();
        let stopwords = stopwords.into_iter().map(|s| s.to_lowercase()).collect();
        Normalizer {
            dictionary,
            stopwords,
        }
    }

    /// Parses the plain-text formats: dictionary lines are
    /// `inflected<TAB>base`, stopword lines hold one token. `#` starts a
    /// comment line.
    pub fn from_strs(dictionary: &str, stopwords: &str) -> Result<Self> {
        let mut dict = HashMap::new();
        for (i, line) in data_lines(dictionary) {
            let mut parts = line.split('\t');
            match (parts.next(), parts.next(), parts.next()) {
                (Some(k), Some(v), None) if !k.is_empty() && !v.is_empty() => {
                    dict.insert(k.to_string(), v.to_string());
                }
                _ => {
                    return Err(Error::Parse {
                        line: i + 1,
                        reason: format!("expected `inflected<TAB>base`, got {line:?}"),
                    })
                }
            }
        }
        let stops = data_lines(stopwords).map(|(_, l)| l.to_string()).collect();
        Ok(Normalizer::new(dict, stops))
    }

    pub fn from_files(dictionary: &Path, stopwords: &Path) -> Result<Self> {
        let d = std::fs::read_to_string(dictionary).map_err(|e| Error::io(dictionary, e))?;
        let s = std::fs::read_to_string(stopwords).map_err(|e| Error::io(stopwords, e))?;
        Self::from_strs(&d, &s)
    }

    pub fn is_stopword(&self, token: &str) -> bool {
        self.stopwords.contains(token)
    }

    pub fn normalize(&self, raw: &str) -> Vec<String> {
        normalize_text(raw, self)
    }
}

fn data_lines(s: &str) -> impl Iterator<Item = (usize, &str)> {
    s.lines()
        .enumerate()
        .map(|(i, l)| (i, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// Splits `raw` on non-alphanumeric characters, lowercases, drops
/// stopwords and maps known inflections to their base form.
pub fn normalize_text(raw: &str, normalizer: &Normalizer) -> Vec<String> {
    raw.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .filter_map(|t| {
            let lower = t.to_lowercase();
            if normalizer.stopwords.contains(&lower) {
                return None;
            }
            let mapped = normalizer.dictionary.get(&lower).cloned().unwrap_or(lower);
            (!mapped.is_empty() && !normalizer.stopwords.contains(&mapped)).then_some(mapped)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn stopwords_and_plurals() {
        let n = Normalizer::default();
        assert_eq!(n.normalize("The Protests in Tehran"), vec!["protest", "tehran"]);
    }

    #[test]
    fn out_of_vocabulary_tokens_survive() {
        let n = Normalizer::default();
        assert_eq!(n.normalize("H1N1 mousavi"), vec!["h1n1", "mousavi"]);
        assert_eq!(n.normalize("entekhabat!!"), vec!["entekhabat"]);
    }

    #[test]
    fn empty_input() {
        assert!(Normalizer::default().normalize("").is_empty());
        assert!(Normalizer::default().normalize("  ,.;  ").is_empty());
    }

    #[test]
    fn inflections_collapse() {
        let n = Normalizer::default();
        assert_eq!(n.normalize("voters voting killed"), vec!["voter", "vote", "kill"]);
    }

    #[test]
    fn malformed_dictionary_names_line() {
        let err = Normalizer::from_strs("# c\nruns\trun\nbroken\n", "").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
    }

    proptest! {
        #[test]
        fn tokens_are_clean(raw in "\\PC{0,80}") {
            let n = Normalizer::default();
            for t in n.normalize(&raw) {
                prop_assert!(!t.is_empty());
                prop_assert_eq!(t.to_lowercase(), t.clone());
                prop_assert!(!n.is_stopword(&t));
            }
        }
    }
}
