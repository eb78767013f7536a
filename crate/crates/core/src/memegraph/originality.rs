use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::memedetect::MemeCluster;

/// Clusters whose first two postings are at most this far apart are ignored.
pub const ORIGINALITY_WINDOW_S: i64 = 3600;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Originality {
    pub author: usize,
    pub originated: u32,
    pub reposted: u32,
    pub index: f64,
}

/// Fraction of eligible memes each participating author posted first.
///
/// Authors with no eligible meme are absent.
pub fn originality_index(clusters: &[MemeCluster], corpus: &Corpus) -> Vec<Originality> {
    let mut tally: BTreeMap<usize, (u32, u32)> = BTreeMap::new();
    for c in clusters {
        let mut posts: Vec<(i64, usize)> = c.videos.iter().map(|&v| (corpus.video(v).upload_time, v)).collect();
        posts.sort_unstable();
        if posts.len() < 2 || posts[1].0 - posts[0].0 <= ORIGINALITY_WINDOW_S {
            continue;
        }
        let first = corpus.author_of(posts[0].1);
        tally.entry(first).or_default().0 += 1;
        let others: BTreeSet<usize> = posts[1..].iter().map(|&(_, v)| corpus.author_of(v)).filter(|&a| a != first).collect();
        for a in others {
            tally.entry(a).or_default().1 += 1;
        }
    }
    tally
        .into_iter()
        .map(|(author, (o, r))| Originality {
            author,
            originated: o,
            reposted: r,
            index: o as f64 / (o + r) as f64,
        })
        .collect()
}
