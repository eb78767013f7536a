use std::collections::HashMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{BagOfWords, Corpus, TextVocabulary, TokenizedCorpus};
use crate::memedetect::MemeCluster;
use crate::{Error, Result};

/// Default cap on meme terms.
pub const DEFAULT_MEME_TERMS: usize = 2000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Text,
    Meme,
}

/// Text terms followed by meme terms in one index space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointVocabulary {
    text: Vec<String>,
    memes: Vec<u32>,
    #[serde(skip)]
    text_index: HashMap<String, u32>,
    #[serde(skip)]
    meme_index: HashMap<u32, u32>,
}

impl JointVocabulary {
    pub fn new(text: Vec<String>, memes: Vec<u32>) -> Result<Self> {
        let mut v = JointVocabulary {
            text,
            memes,
            text_index: HashMap::new(),
            meme_index: HashMap::new(),
        };
        v.reindex()?;
        Ok(v)
    }

    fn reindex(&mut self) -> Result<()> {
        self.text_index = self.text.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        let offset = self.text.len() as u32;
        self.meme_index = self.memes.iter().enumerate().map(|(i, &m)| (m, offset + i as u32)).collect();
        if self.text_index.len() != self.text.len() || self.meme_index.len() != self.memes.len() {
            return Err(Error::Conflict("duplicate term in joint vocabulary".into()));
        }
        Ok(())
    }

    /// Text vocabulary plus the `max_memes` memes found in the most videos.
    pub fn build(text: &TextVocabulary, clusters: &[MemeCluster], max_memes: usize) -> Result<Self> {
        let mut ranked: Vec<&MemeCluster> = clusters.iter().collect();
        ranked.sort_by(|a, b| b.videos.len().cmp(&a.videos.len()).then(a.meme_id.cmp(&b.meme_id)));
        ranked.truncate(max_memes);
        let mut memes: Vec<u32> = ranked.iter().map(|c| c.meme_id).collect();
        memes.sort_unstable();
        JointVocabulary::new(text.terms().to_vec(), memes)
    }

    pub fn from_json(raw: &str) -> Result<Self> {
        let mut v: JointVocabulary = serde_json::from_str(raw)?;
        v.reindex()?;
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.text.len() + self.memes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn text_terms(&self) -> &[String] {
        &self.text
    }

    pub fn meme_terms(&self) -> &[u32] {
        &self.memes
    }

    pub fn range(&self, m: Modality) -> Range<usize> {
        match m {
            Modality::Text => 0..self.text.len(),
            Modality::Meme => self.text.len()..self.len(),
        }
    }

    pub fn modality(&self, term: u32) -> Option<Modality> {
        let t = term as usize;
        if t < self.text.len() {
            Some(Modality::Text)
        } else if t < self.len() {
            Some(Modality::Meme)
        } else {
            None
        }
    }

    pub fn text_index(&self, term: &str) -> Option<u32> {
        self.text_index.get(term).copied()
    }

    pub fn meme_index(&self, meme_id: u32) -> Option<u32> {
        self.meme_index.get(&meme_id).copied()
    }

    /// Display form: the word itself, or `meme:<id>`.
    pub fn label(&self, term: u32) -> String {
        match self.modality(term) {
            Some(Modality::Text) => self.text[term as usize].clone(),
            Some(Modality::Meme) => format!("meme:{}", self.memes[term as usize - self.text.len()]),
            None => format!("?{term}"),
        }
    }

    pub fn sha256(&self) -> String {
        let mut h = Sha256::new();
        for t in &self.text {
            h.update(b"t:");
            h.update(t.as_bytes());
            h.update(b"\n");
        }
        for m in &self.memes {
            h.update(format!("m:{m}\n").as_bytes());
        }
        hex::encode(h.finalize())
    }

    /// One joint bag per corpus video, in corpus order.
    ///
    /// A meme contributes one count per member shot in the video.
    pub fn documents(&self, corpus: &Corpus, tokens: &TokenizedCorpus, clusters: &[MemeCluster]) -> Vec<BagOfWords> {
        let mut bags: Vec<BagOfWords> = corpus
            .videos()
            .iter()
            .zip(&tokens.docs)
            .map(|(v, toks)| {
                let mut bag = BagOfWords {
                    doc_id: v.video_id.clone(),
                    counts: Default::default(),
                };
                for t in toks {
                    if let Some(i) = self.text_index(t) {
                        *bag.counts.entry(i).or_insert(0) += 1;
                    }
                }
                bag
            })
            .collect();
        for c in clusters {
            if let Some(term) = self.meme_index(c.meme_id) {
                for (video, shots) in c.shots_per_video(corpus) {
                    *bags[video].counts.entry(term).or_insert(0) += shots;
                }
            }
        }
        bags
    }

    /// The part of `bag` belonging to one modality.
    pub fn restrict(&self, bag: &BagOfWords, m: Modality) -> BagOfWords {
        let r = self.range(m);
        BagOfWords {
            doc_id: bag.doc_id.clone(),
            counts: bag
                .counts
                .iter()
                .filter(|(&t, _)| r.contains(&(t as usize)))
                .map(|(&t, &c)| (t, c))
                .collect(),
        }
    }
}
