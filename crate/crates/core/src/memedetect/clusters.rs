use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::corpus::{format_timestamp, parse_timestamp, Corpus};
use crate::imgproc::FrameRef;
use crate::{Error, Result};

/// A closed, filtered near-duplicate class of keyframes.
#[derive(Clone, Debug, PartialEq)]
pub struct MemeCluster {
    pub meme_id: u32,
    /// Sorted member keyframes.
    pub members: Vec<FrameRef>,
    /// Sorted corpus indices of videos containing a member.
    pub videos: Vec<usize>,
    /// Sorted corpus indices of the authors of those videos.
    pub authors: Vec<usize>,
    pub onset_time: i64,
    pub last_time: i64,
}

impl MemeCluster {
    /// Resolves members against the corpus; `meme_id` is left at 0.
    pub fn resolve(mut members: Vec<FrameRef>, corpus: &Corpus) -> Result<Self> {
        members.sort();
        members.dedup();
        let mut videos = BTreeSet::new();
        for m in &members {
            let v = corpus
                .video_index(&m.video_id)
                .ok_or_else(|| Error::UnknownRef(format!("frame {}#{} has no video", m.video_id, m.shot)))?;
            videos.insert(v);
        }
        let videos: Vec<usize> = videos.into_iter().collect();
        let authors: BTreeSet<usize> = videos.iter().map(|&v| corpus.author_of(v)).collect();
        let times = videos.iter().map(|&v| corpus.video(v).upload_time);
        let onset_time = times.clone().min().unwrap_or(0);
        let last_time = times.max().unwrap_or(0);
        Ok(MemeCluster {
            meme_id: 0,
            members,
            videos,
            authors: authors.into_iter().collect(),
            onset_time,
            last_time,
        })
    }

    /// Member shots per video, aligned with `videos`.
    pub fn shots_per_video(&self, corpus: &Corpus) -> Vec<(usize, u32)> {
        let mut out: Vec<(usize, u32)> = self.videos.iter().map(|&v| (v, 0)).collect();
        for m in &self.members {
            if let Some(v) = corpus.video_index(&m.video_id) {
                if let Ok(i) = self.videos.binary_search(&v) {
                    out[i].1 += 1;
                }
            }
        }
        out
    }

    pub fn to_record(&self) -> ClusterRecord {
        ClusterRecord {
            meme_id: self.meme_id,
            members: self.members.clone(),
            onset_time: format_timestamp(self.onset_time),
            last_time: format_timestamp(self.last_time),
        }
    }

    pub fn from_record(rec: ClusterRecord, corpus: &Corpus) -> Result<Self> {
        let mut c = MemeCluster::resolve(rec.members, corpus)?;
        c.meme_id = rec.meme_id;
        for t in [&rec.onset_time, &rec.last_time] {
            if parse_timestamp(t).is_none() {
                return Err(Error::InvalidInput(format!("bad cluster timestamp {t:?}")));
            }
        }
        Ok(c)
    }
}

/// The on-disk form of a cluster (one JSON object per line).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterRecord {
    pub meme_id: u32,
    pub members: Vec<FrameRef>,
    pub onset_time: String,
    pub last_time: String,
}

/// Keeps components spanning at least two videos and two authors.
///
/// `frames[row]` names the keyframe behind each feature row. Surviving
/// clusters get ids in order of onset time, then first member.
pub fn filter_clusters(components: &[Vec<u32>], frames: &[FrameRef], corpus: &Corpus) -> Result<Vec<MemeCluster>> {
    let mut kept = Vec::new();
    for comp in components {
        let members = comp
            .iter()
            .map(|&r| {
                frames
                    .get(r as usize)
                    .cloned()
                    .ok_or_else(|| Error::UnknownRef(format!("feature row {r} has no frame")))
            })
            .collect::<Result<Vec<_>>>()?;
        let c = MemeCluster::resolve(members, corpus)?;
        if c.videos.len() >= 2 && c.authors.len() >= 2 {
            kept.push(c);
        }
    }
    kept.sort_by(|a, b| a.onset_time.cmp(&b.onset_time).then_with(|| a.members.cmp(&b.members)));
    for (i, c) in kept.iter_mut().enumerate() {
        c.meme_id = i as u32;
    }
    Ok(kept)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::VideoDoc;

    fn video(id: &str, author: &str, t: i64) -> VideoDoc {
        VideoDoc {
            video_id: id.into(),
            author_id: author.into(),
            upload_time: t,
            title: String::new(),
            description: String::new(),
            view_count: 0,
            frames: Vec::new(),
        }
    }

    fn fr(v: &str, s: u32) -> FrameRef {
        FrameRef {
            video_id: v.into(),
            shot: s,
        }
    }

    fn setup() -> (Corpus, Vec<FrameRef>) {
        let corpus = Corpus::from_videos(vec![video("v1", "a", 100), video("v2", "a", 200), video("v3", "b", 50)]).unwrap();
        let frames = vec![fr("v1", 0), fr("v1", 1), fr("v1", 2), fr("v2", 0), fr("v3", 0)];
        (corpus, frames)
    }

    #[test]
    fn single_video_cluster_removed() {
        let (c, f) = setup();
        assert!(filter_clusters(&[vec![0, 1, 2]], &f, &c).unwrap().is_empty());
    }

    #[test]
    fn single_author_cluster_removed() {
        let (c, f) = setup();
        assert!(filter_clusters(&[vec![0, 3]], &f, &c).unwrap().is_empty());
    }

    #[test]
    fn two_video_two_author_cluster_kept() {
        let (c, f) = setup();
        let got = filter_clusters(&[vec![0, 3], vec![1, 4]], &f, &c).unwrap();
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].onset_time, 50);
        assert_eq!(got[0].last_time, 100);
        assert_eq!(got[0].authors.len(), 2);
    }

    #[test]
    fn unknown_frame_is_an_error() {
        let (c, mut f) = setup();
        f.push(fr("nope", 0));
        assert!(filter_clusters(&[vec![0, 5]], &f, &c).is_err());
        assert!(filter_clusters(&[vec![0, 9]], &f, &c).is_err());
    }
}
