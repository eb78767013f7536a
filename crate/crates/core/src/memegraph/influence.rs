use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::memedetect::MemeCluster;

/// Precedence counts of one video within one meme's subgraph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Zeta {
    pub meme_id: u32,
    pub video: usize,
    /// Videos of the meme posted strictly earlier.
    pub zeta_in: u32,
    /// Videos of the meme posted strictly later.
    pub zeta_out: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuthorInfluence {
    pub author: usize,
    pub chi_hat: f64,
    pub chi_bar: f64,
    pub productivity: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InfluenceRecord {
    pub zetas: Vec<Zeta>,
    /// Indexed by corpus video.
    pub video_chi: Vec<f64>,
    /// Indexed by corpus author.
    pub authors: Vec<AuthorInfluence>,
}

/// In/out precedence counts for the videos of one meme, ties counted on
/// neither side.
pub fn meme_zetas(cluster: &MemeCluster, corpus: &Corpus) -> Vec<Zeta> {
    let mut times: Vec<i64> = cluster.videos.iter().map(|&v| corpus.video(v).upload_time).collect();
    times.sort_unstable();
    cluster
        .videos
        .iter()
        .map(|&v| {
            let t = corpus.video(v).upload_time;
            let before = times.partition_point(|&x| x < t);
            let after = times.len() - times.partition_point(|&x| x <= t);
            Zeta {
                meme_id: cluster.meme_id,
                video: v,
                zeta_in: before as u32,
                zeta_out: after as u32,
            }
        })
        .collect()
}

pub fn influence_indices(clusters: &[MemeCluster], corpus: &Corpus) -> InfluenceRecord {
    let mut zetas = Vec::new();
    let mut video_chi = vec![0.0; corpus.len()];
    for c in clusters {
        for z in meme_zetas(c, corpus) {
            video_chi[z.video] += z.zeta_out as f64 / (1.0 + z.zeta_in as f64);
            zetas.push(z);
        }
    }
    let authors = corpus
        .authors()
        .iter()
        .enumerate()
        .map(|(a, rec)| {
            let chi_hat: f64 = rec
                .video_ids
                .iter()
                .filter_map(|id| corpus.video_index(id))
                .map(|v| video_chi[v])
                .sum();
            let productivity = rec.productivity;
            AuthorInfluence {
                author: a,
                chi_hat,
                chi_bar: if productivity > 0 { chi_hat / productivity as f64 } else { 0.0 },
                productivity,
            }
        })
        .collect();
    InfluenceRecord {
        zetas,
        video_chi,
        authors,
    }
}
