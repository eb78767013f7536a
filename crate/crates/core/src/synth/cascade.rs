//! Meme cascades whose final size depends on first-day observables.
//!
//! Each meme has a first-day burst of videos and a cue word that appears in
//! the titles of its videos. The final log-volume is the log of the burst
//! size plus an additive effect of the cue word plus Gaussian noise, so
//! first-day text carries information that first-day volume alone lacks.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};

use crate::corpus::{Corpus, TokenizedCorpus, VideoDoc};
use crate::imgproc::FrameRef;
use crate::memedetect::MemeCluster;
use crate::{Result, SECONDS_PER_DAY};

#[derive(Clone, Debug)]
pub struct CascadeSpec {
    pub memes: usize,
    pub authors: usize,
    pub days: u32,
    pub cue_words: usize,
    pub filler_words: usize,
    /// Mean of the Poisson part of the first-day burst (which is at least 2).
    pub burst_mean: f64,
    /// Largest absolute cue effect on `log10` volume.
    pub cue_effect: f64,
    pub noise_sd: f64,
    pub start_time: i64,
}

impl Default for CascadeSpec {
    fn default() -> Self {
        CascadeSpec {
            memes: 1000,
            authors: 400,
            days: 30,
            cue_words: 20,
            filler_words: 60,
            burst_mean: 3.0,
            cue_effect: 0.4,
            noise_sd: 0.08,
            start_time: 1_244_851_200,
        }
    }
}

pub struct SynthCascade {
    pub corpus: Corpus,
    pub clusters: Vec<MemeCluster>,
    pub tokens: TokenizedCorpus,
    /// Cue word index of each meme.
    pub cue: Vec<usize>,
    /// Effect of each cue word on `log10` volume.
    pub effects: Vec<f64>,
}

fn cue_word(i: usize) -> String {
    format!("cue{i:02}")
}

fn filler_word(i: usize) -> String {
    format!("word{i:02}")
}

pub fn generate_cascades(spec: &CascadeSpec, seed: u64) -> Result<SynthCascade> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let burst = Poisson::new(spec.burst_mean.max(1e-9)).map_err(|e| crate::Error::InvalidInput(e.to_string()))?;
    let noise = Normal::new(0.0, spec.noise_sd).map_err(|e| crate::Error::InvalidInput(e.to_string()))?;
    let effects: Vec<f64> = (0..spec.cue_words)
        .map(|i| {
            let t = if spec.cue_words > 1 { i as f64 / (spec.cue_words - 1) as f64 } else { 0.5 };
            spec.cue_effect * (2.0 * t - 1.0)
        })
        .collect();
    let authors: Vec<String> = (0..spec.authors.max(2)).map(|a| format!("u{a:03}")).collect();
    let fillers: Vec<String> = (0..spec.filler_words.max(1)).map(filler_word).collect();
    let span = spec.days as f64 * SECONDS_PER_DAY;

    let mut videos = Vec::new();
    let mut members: Vec<Vec<FrameRef>> = Vec::with_capacity(spec.memes);
    let mut cue = Vec::with_capacity(spec.memes);
    for m in 0..spec.memes {
        let c = rng.random_range(0..spec.cue_words.max(1));
        cue.push(c);
        let onset = spec.start_time + rng.random_range(0.0..span) as i64;
        let n1 = 2 + burst.sample(&mut rng) as usize;
        let log_v = (n1 as f64).log10() + 0.35 + effects[c] + noise.sample(&mut rng);
        let total = (10f64.powf(log_v).round() as usize).max(n1);
        let life_days = 2.0 + 10.0 * (total as f64).log10() * rng.random_range(0.5..1.5);
        let mut times = vec![onset];
        for _ in 1..n1 {
            times.push(onset + rng.random_range(0.0..SECONDS_PER_DAY * 0.95) as i64);
        }
        for _ in n1..total {
            times.push(onset + rng.random_range(SECONDS_PER_DAY * 1.05..SECONDS_PER_DAY * life_days) as i64);
        }
        times.sort_unstable();
        let first = rng.random_range(0..authors.len());
        let second = (first + 1 + rng.random_range(0..authors.len() - 1)) % authors.len();
        let mut refs = Vec::with_capacity(total);
        for (j, &t) in times.iter().enumerate() {
            let author = match j {
                0 => first,
                1 => second,
                _ => rng.random_range(0..authors.len()),
            };
            let video_id = format!("m{m:04}_{j:03}");
            let title = format!(
                "{} {} {}",
                cue_word(c),
                fillers.choose(&mut rng).expect("non-empty"),
                fillers.choose(&mut rng).expect("non-empty")
            );
            refs.push(FrameRef {
                video_id: video_id.clone(),
                shot: 0,
            });
            videos.push(VideoDoc {
                video_id,
                author_id: authors[author].clone(),
                upload_time: t,
                title,
                description: String::new(),
                view_count: rng.random_range(10..10_000),
                frames: Vec::new(),
            });
        }
        members.push(refs);
    }
    let corpus = Corpus::from_videos(videos)?;
    let mut clusters = Vec::with_capacity(members.len());
    for (m, refs) in members.into_iter().enumerate() {
        let mut c = MemeCluster::resolve(refs, &corpus)?;
        c.meme_id = m as u32;
        clusters.push(c);
    }
    let tokens = TokenizedCorpus {
        docs: corpus
            .videos()
            .iter()
            .map(|v| v.title.split_whitespace().map(str::to_string).collect())
            .collect(),
    };
    Ok(SynthCascade {
        corpus,
        clusters,
        tokens,
        cue,
        effects,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape() {
        let spec = CascadeSpec {
            memes: 50,
            ..Default::default()
        };
        let s = generate_cascades(&spec, 2).unwrap();
        assert_eq!(s.clusters.len(), 50);
        for c in &s.clusters {
            assert!(c.videos.len() >= 2);
            assert!(c.authors.len() >= 2);
            assert!(c.onset_time <= c.last_time);
        }
        assert_eq!(s.tokens.docs.len(), s.corpus.len());
    }
}
