use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::RawFrame;
use crate::{Error, Result};

const BINS_PER_CHANNEL: usize = 8;
pub const HISTOGRAM_BINS: usize = BINS_PER_CHANNEL * BINS_PER_CHANNEL * BINS_PER_CHANNEL;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub video_id: String,
    pub shot_index: u32,
    /// Index of the sampled keyframe in the input frame list.
    pub keyframe: usize,
    pub first_frame: usize,
    pub last_frame: usize,
    pub start_s: f64,
    pub end_s: f64,
}

/// Normalised 8x8x8 RGB histogram.
pub fn color_histogram(image: &image::RgbImage) -> Vec<f64> {
    let mut h = vec![0.0; HISTOGRAM_BINS];
    for p in image.pixels() {
        let [r, g, b] = p.0;
        let bin = (r as usize >> 5) * 64 + (g as usize >> 5) * 8 + (b as usize >> 5);
        h[bin] += 1.0;
    }
    let n = (image.width() * image.height()) as f64;
    h.iter_mut().for_each(|v| *v /= n);
    h
}

pub fn histogram_l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

fn video_rng(video_id: &str, seed: u64) -> ChaCha8Rng {
    // FNV-1a so keyframe choice does not depend on processing order
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in video_id.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    ChaCha8Rng::seed_from_u64(seed ^ h)
}

/// Cuts a video's frame sequence into shots where the L1 distance between
/// consecutive normalised colour histograms exceeds `threshold`, and
/// samples one keyframe per shot uniformly at random.
pub fn segment_shots(frames: &[RawFrame], threshold: f64, seed: u64) -> Result<Vec<ShotRecord>> {
    if frames.is_empty() {
        return Err(Error::Empty("frame sequence"));
    }
    if !(threshold > 0.0) {
        return Err(Error::InvalidInput(format!("shot threshold must be positive, got {threshold}")));
    }
    let hists: Vec<Vec<f64>> = frames.iter().map(|f| color_histogram(&f.image)).collect();
    let mut starts = vec![0];
    for i in 1..frames.len() {
        if histogram_l1(&hists[i - 1], &hists[i]) > threshold {
            starts.push(i);
        }
    }
    let offsets: Vec<f64> = frames.iter().map(|f| f.t_offset_s).collect();
    Ok(build_shots(&frames[0].video_id, &starts, &offsets, seed))
}

/// Shot records for a manifest that already carries shot labels, one label
/// per frame in time order.
pub fn keyframes_from_labels(video_id: &str, labels: &[u32], offsets: &[f64], seed: u64) -> Result<Vec<ShotRecord>> {
    if labels.is_empty() {
        return Err(Error::Empty("frame sequence"));
    }
    if labels.len() != offsets.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            found: offsets.len(),
        });
    }
    let mut starts = vec![0];
    for i in 1..labels.len() {
        if labels[i] != labels[i - 1] {
            starts.push(i);
        }
    }
    Ok(build_shots(video_id, &starts, offsets, seed))
}

fn build_shots(video_id: &str, starts: &[usize], offsets: &[f64], seed: u64) -> Vec<ShotRecord> {
    let n = offsets.len();
    let spacing = if n >= 2 {
        (offsets[n - 1] - offsets[0]) / (n - 1) as f64
    } else {
        0.0
    };
    let spacing = if spacing > 0.0 { spacing } else { 1.0 };
    let mut rng = video_rng(video_id, seed);
    starts
        .iter()
        .enumerate()
        .map(|(shot, &first)| {
            let last = starts.get(shot + 1).map_or(n - 1, |&next| next - 1);
            let start_s = offsets[first];
            let mut end_s = starts.get(shot + 1).map_or(offsets[n - 1] + spacing, |&next| offsets[next]);
            if end_s <= start_s {
                end_s = start_s + spacing;
            }
            ShotRecord {
                video_id: video_id.to_string(),
                shot_index: shot as u32,
                keyframe: rng.random_range(first..=last),
                first_frame: first,
                last_frame: last,
                start_s,
                end_s,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::{Rgb, RgbImage};

    fn solid(c: [u8; 3]) -> RawFrame {
        RawFrame::new("v", 0.0, RgbImage::from_pixel(16, 16, Rgb(c))).unwrap()
    }

    fn timed(mut frames: Vec<RawFrame>) -> Vec<RawFrame> {
        for (i, f) in frames.iter_mut().enumerate() {
            f.t_offset_s = i as f64 * 0.5;
        }
        frames
    }

    #[test]
    fn identical_frames_form_one_shot() {
        let shots = segment_shots(&timed(vec![solid([10, 20, 30]); 10]), 0.5, 7).unwrap();
        assert_eq!(shots.len(), 1);
        assert_eq!((shots[0].first_frame, shots[0].last_frame), (0, 9));
        assert!(shots[0].start_s < shots[0].end_s);
    }

    #[test]
    fn red_then_blue_splits_at_five() {
        let mut frames = vec![solid([255, 0, 0]); 5];
        frames.extend(vec![solid([0, 0, 255]); 5]);
        let shots = segment_shots(&timed(frames), 0.5, 7).unwrap();
        assert_eq!(shots.len(), 2);
        assert_eq!(shots[1].first_frame, 5);
        assert_eq!(shots[1].shot_index, 1);
        assert!((5..10).contains(&shots[1].keyframe));
        assert_eq!(shots[0].end_s, shots[1].start_s);
    }

    #[test]
    fn empty_sequence_and_bad_threshold() {
        assert!(segment_shots(&[], 0.5, 0).is_err());
        assert!(segment_shots(&[solid([0, 0, 0])], 0.0, 0).is_err());
    }

    #[test]
    fn keyframe_sampling_is_seeded() {
        let frames = timed(vec![solid([1, 1, 1]); 40]);
        let a = segment_shots(&frames, 0.5, 11).unwrap();
        let b = segment_shots(&frames, 0.5, 11).unwrap();
        assert_eq!(a, b);
        let picks: std::collections::BTreeSet<usize> =
            (0..20).map(|s| segment_shots(&frames, 0.5, s).unwrap()[0].keyframe).collect();
        assert!(picks.len() > 1);
    }

    #[test]
    fn labels_define_shots() {
        let shots = keyframes_from_labels("v", &[0, 0, 1, 2, 2], &[0.0, 1.0, 2.0, 3.0, 4.0], 1).unwrap();
        assert_eq!(shots.len(), 3);
        assert_eq!((shots[2].first_frame, shots[2].last_frame), (3, 4));
        assert_eq!(shots[2].end_s, 5.0);
    }
}
