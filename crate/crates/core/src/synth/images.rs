//! Planted near-duplicate keyframe corpus.
//!
//! Every group starts from one rendered scene; each copy receives an
//! independent mix of edits of the kind re-posters apply: letterbox
//! borders, contrast and brightness shifts, a corner logo or caption
//! overlay, and mild sensor noise. Distractor frames are unrelated scenes.

use std::collections::BTreeSet;
use std::path::Path;

use image::{imageops, Rgb, RgbImage};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::corpus::{format_timestamp, FrameEntry, VideoDoc};
use crate::correlogram::{extract_batch, to_matrix, DEFAULT_DISTANCES};
use crate::imgproc::{gray_entropy, prepare_frame, FrameRef, PrepOptions, PreparedFrame};
use crate::matrix::Matrix;
use crate::par::{self, Exec};
use crate::memedetect::LabeledPair;
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct ImageCorpusSpec {
    pub videos: usize,
    pub shots_per_video: usize,
    pub authors: usize,
    pub groups: usize,
    pub copies: usize,
    pub width: u32,
    pub height: u32,
    /// Uploads are spread over this many days.
    pub days: u32,
    pub start_time: i64,
    /// Non-duplicate labelled pairs per positive pair.
    pub negatives_per_positive: f64,
}

impl Default for ImageCorpusSpec {
    fn default() -> Self {
        ImageCorpusSpec {
            videos: 125,
            shots_per_video: 4,
            authors: 40,
            groups: 50,
            copies: 6,
            width: 96,
            height: 72,
            days: 20,
            // 2009-06-13T00:00:00Z
            start_time: 1_244_851_200,
            negatives_per_positive: 2.0,
        }
    }
}

impl ImageCorpusSpec {
    pub fn frames(&self) -> usize {
        self.videos * self.shots_per_video
    }
}

pub struct SynthImageCorpus {
    pub videos: Vec<VideoDoc>,
    /// One keyframe per shot, in video then shot order.
    pub frames: Vec<(FrameRef, RgbImage)>,
    /// Planted duplicate groups.
    pub groups: Vec<Vec<FrameRef>>,
    pub labels: Vec<LabeledPair>,
}

const WORDS: [&str; 24] = [
    "protest", "election", "crowd", "police", "street", "rally", "vote", "night", "square", "march", "riot",
    "speech", "video", "city", "people", "student", "government", "news", "footage", "clash", "reform",
    "leader", "rooftop", "chant",
];

fn random_color(rng: &mut impl Rng) -> Rgb<u8> {
    Rgb([rng.random(), rng.random(), rng.random()])
}

/// A textured scene: a two-colour gradient with rectangles, discs and
/// stripes on top. Scenes are redrawn until their grayscale entropy is
/// well clear of the blank-frame test.
pub fn render_scene(rng: &mut impl Rng, w: u32, h: u32) -> RgbImage {
    loop {
        let img = draw_scene(rng, w, h);
        if gray_entropy(&img) >= MIN_SCENE_ENTROPY {
            return img;
        }
    }
}

const MIN_SCENE_ENTROPY: f64 = 2.0;

fn draw_scene(rng: &mut impl Rng, w: u32, h: u32) -> RgbImage {
    let (c0, c1) = (random_color(rng), random_color(rng));
    let diagonal = rng.random_bool(0.5);
    let mut img = RgbImage::from_fn(w, h, |x, y| {
        let t = if diagonal {
            (x + y) as f64 / (w + h) as f64
        } else {
            y as f64 / h as f64
        };
        Rgb(std::array::from_fn(|c| (c0.0[c] as f64 * (1.0 - t) + c1.0[c] as f64 * t) as u8))
    });
    let shapes = rng.random_range(6..12);
    for _ in 0..shapes {
        let col = random_color(rng);
        let (cx, cy) = (rng.random_range(0..w) as i64, rng.random_range(0..h) as i64);
        let (rx, ry) = (rng.random_range(4..w / 3) as i64, rng.random_range(4..h / 3) as i64);
        match rng.random_range(0..3) {
            0 => {
                for y in (cy - ry).max(0)..(cy + ry).min(h as i64) {
                    for x in (cx - rx).max(0)..(cx + rx).min(w as i64) {
                        img.put_pixel(x as u32, y as u32, col);
                    }
                }
            }
            1 => {
                for y in (cy - ry).max(0)..(cy + ry).min(h as i64) {
                    for x in (cx - rx).max(0)..(cx + rx).min(w as i64) {
                        let (dx, dy) = ((x - cx) as f64 / rx as f64, (y - cy) as f64 / ry as f64);
                        if dx * dx + dy * dy <= 1.0 {
                            img.put_pixel(x as u32, y as u32, col);
                        }
                    }
                }
            }
            _ => {
                let period = rng.random_range(3..8) as i64;
                for y in (cy - ry).max(0)..(cy + ry).min(h as i64) {
                    for x in (cx - rx).max(0)..(cx + rx).min(w as i64) {
                        if (x / period) % 2 == 0 {
                            img.put_pixel(x as u32, y as u32, col);
                        }
                    }
                }
            }
        }
    }
    img
}

/// Letterbox: the frame shrunk into uniform bars on two opposite sides.
fn add_border(img: &RgbImage, rng: &mut impl Rng) -> RgbImage {
    let (w, h) = img.dimensions();
    let shade: u8 = if rng.random_bool(0.7) { rng.random_range(0..12) } else { rng.random_range(240..=255) };
    let mut out = RgbImage::from_pixel(w, h, Rgb([shade; 3]));
    if rng.random_bool(0.5) {
        let bar = rng.random_range(h / 12..=h / 6).max(1);
        let inner = imageops::resize(img, w, h - 2 * bar, imageops::FilterType::Triangle);
        imageops::replace(&mut out, &inner, 0, bar as i64);
    } else {
        let bar = rng.random_range(w / 12..=w / 6).max(1);
        let inner = imageops::resize(img, w - 2 * bar, h, imageops::FilterType::Triangle);
        imageops::replace(&mut out, &inner, bar as i64, 0);
    }
    out
}

fn adjust_contrast(img: &mut RgbImage, rng: &mut impl Rng) {
    let gain = rng.random_range(0.85..1.15);
    let offset = rng.random_range(-12.0..12.0);
    for p in img.pixels_mut() {
        for c in p.0.iter_mut() {
            *c = ((*c as f64 - 128.0) * gain + 128.0 + offset).round().clamp(0.0, 255.0) as u8;
        }
    }
}

/// A small corner logo or a caption strip along the bottom edge.
fn add_overlay(img: &mut RgbImage, rng: &mut impl Rng) {
    let (w, h) = img.dimensions();
    let col = random_color(rng);
    if rng.random_bool(0.5) {
        let (lw, lh) = (w / 8, h / 8);
        let x0 = if rng.random_bool(0.5) { 2 } else { w - lw - 2 };
        let y0 = if rng.random_bool(0.5) { 2 } else { h - lh - 2 };
        for y in y0..y0 + lh {
            for x in x0..x0 + lw {
                img.put_pixel(x, y, col);
            }
        }
    } else {
        let strip = h / 10;
        let glyph = random_color(rng);
        for y in h - strip - 2..h - 2 {
            for x in w / 6..w - w / 6 {
                let on = (x / 2 + y) % 5 == 0;
                img.put_pixel(x, y, if on { glyph } else { col });
            }
        }
    }
}

fn add_noise(img: &mut RgbImage, rng: &mut impl Rng) {
    let n = Normal::new(0.0, 3.0).expect("positive sd");
    for p in img.pixels_mut() {
        for c in p.0.iter_mut() {
            *c = (*c as f64 + n.sample(rng)).round().clamp(0.0, 255.0) as u8;
        }
    }
}

/// One re-posted copy of `base`.
pub fn jitter(base: &RgbImage, rng: &mut impl Rng) -> RgbImage {
    let mut img = if rng.random_bool(0.4) { add_border(base, rng) } else { base.clone() };
    if rng.random_bool(0.6) {
        adjust_contrast(&mut img, rng);
    }
    if rng.random_bool(0.4) {
        add_overlay(&mut img, rng);
    }
    add_noise(&mut img, rng);
    img
}

pub fn generate_image_corpus(spec: &ImageCorpusSpec, seed: u64) -> Result<SynthImageCorpus> {
    let slots = spec.frames();
    if spec.groups * spec.copies > slots || spec.copies > spec.videos || spec.copies < 2 {
        return Err(Error::InvalidInput("planted groups do not fit the corpus".into()));
    }
    if spec.authors < 2 || spec.width < 32 || spec.height < 32 {
        return Err(Error::InvalidInput("corpus needs two authors and frames of at least 32x32".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (spec.width, spec.height);

    // slot -> Some(group) for planted copies
    let mut assignment: Vec<Option<usize>> = vec![None; slots];
    let mut free: Vec<usize> = (0..spec.videos).collect();
    let mut free_shots: Vec<Vec<usize>> = (0..spec.videos).map(|_| (0..spec.shots_per_video).collect()).collect();
    for g in 0..spec.groups {
        free.retain(|&v| !free_shots[v].is_empty());
        if free.len() < spec.copies {
            return Err(Error::InvalidInput("not enough videos to spread planted copies".into()));
        }
        let chosen: Vec<usize> = free.choose_multiple(&mut rng, spec.copies).copied().collect();
        for v in chosen {
            let k = rng.random_range(0..free_shots[v].len());
            let shot = free_shots[v].swap_remove(k);
            assignment[v * spec.shots_per_video + shot] = Some(g);
        }
    }

    let group_words: Vec<[&str; 2]> = (0..spec.groups)
        .map(|_| [*WORDS.choose(&mut rng).unwrap(), *WORDS.choose(&mut rng).unwrap()])
        .collect();
    let bases: Vec<RgbImage> = (0..spec.groups).map(|_| render_scene(&mut rng, w, h)).collect();
    let mut videos = Vec::with_capacity(spec.videos);
    let mut frames = Vec::with_capacity(slots);
    let mut groups: Vec<Vec<FrameRef>> = vec![Vec::new(); spec.groups];
    let span = spec.days as i64 * 86_400;
    for v in 0..spec.videos {
        let video_id = format!("v{v:04}");
        let author_id = format!("a{:03}", if v < spec.authors { v } else { rng.random_range(0..spec.authors) });
        let upload_time = spec.start_time + rng.random_range(0..span);
        let mut words: BTreeSet<&str> = BTreeSet::new();
        let mut entries = Vec::new();
        for s in 0..spec.shots_per_video {
            let slot = v * spec.shots_per_video + s;
            let fref = FrameRef {
                video_id: video_id.clone(),
                shot: s as u32,
            };
            let img = match assignment[slot] {
                Some(g) => {
                    groups[g].push(fref.clone());
                    words.extend(group_words[g]);
                    jitter(&bases[g], &mut rng)
                }
                None => {
                    let base = render_scene(&mut rng, w, h);
                    jitter(&base, &mut rng)
                }
            };
            entries.push(FrameEntry {
                shot: Some(s as u32),
                path: frame_file(&fref),
                t_offset_s: 5.0 * s as f64,
            });
            frames.push((fref, img));
        }
        words.insert(WORDS.choose(&mut rng).unwrap());
        let title = words.iter().copied().collect::<Vec<_>>().join(" ");
        videos.push(VideoDoc {
            video_id,
            author_id,
            upload_time,
            description: format!("uploaded {}", format_timestamp(upload_time)),
            title,
            view_count: rng.random_range(10..100_000),
            frames: entries,
        });
    }

    let mut labels = Vec::new();
    for g in &groups {
        for i in 0..g.len() {
            for j in i + 1..g.len() {
                labels.push(LabeledPair {
                    a: g[i].clone(),
                    b: g[j].clone(),
                    duplicate: true,
                });
            }
        }
    }
    let group_of: Vec<Option<usize>> = {
        let mut out = vec![None; slots];
        for (gi, g) in groups.iter().enumerate() {
            for f in g {
                let v: usize = f.video_id[1..].parse().expect("generated id");
                out[v * spec.shots_per_video + f.shot as usize] = Some(gi);
            }
        }
        out
    };
    let negatives = (labels.len() as f64 * spec.negatives_per_positive).round() as usize;
    let mut seen = BTreeSet::new();
    while seen.len() < negatives {
        let (a, b) = (rng.random_range(0..slots), rng.random_range(0..slots));
        let (a, b) = (a.min(b), a.max(b));
        let same = a == b || (group_of[a].is_some() && group_of[a] == group_of[b]);
        if !same && seen.insert((a, b)) {
            labels.push(LabeledPair {
                a: frames[a].0.clone(),
                b: frames[b].0.clone(),
                duplicate: false,
            });
        }
    }
    Ok(SynthImageCorpus {
        videos,
        frames,
        groups,
        labels,
    })
}

impl SynthImageCorpus {
    /// Prepared-keyframe correlograms, skipping frames flagged blank.
    pub fn features(&self, exec: Exec, options: &PrepOptions) -> Result<(Vec<FrameRef>, Matrix)> {
        let prepared = par::try_map(exec, &self.frames, |(_, img)| prepare_frame(img, options))?;
        let keep: Vec<usize> = (0..prepared.len()).filter(|&i| !prepared[i].blank).collect();
        let frames: Vec<PreparedFrame> = keep.iter().map(|&i| prepared[i].clone()).collect();
        let feats = extract_batch(exec, &frames, &DEFAULT_DISTANCES)
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        Ok((keep.iter().map(|&i| self.frames[i].0.clone()).collect(), to_matrix(&feats)?))
    }
}

pub fn frame_file(f: &FrameRef) -> String {
    format!("frames/{}_{:02}.png", f.video_id, f.shot)
}

/// Writes `manifest.jsonl`, `labels.jsonl` and `frames/*.png` under `dir`.
pub fn write_image_corpus(dir: &Path, corpus: &SynthImageCorpus) -> Result<()> {
    let frames_dir = dir.join("frames");
    std::fs::create_dir_all(&frames_dir).map_err(|e| Error::io(&frames_dir, e))?;
    for (f, img) in &corpus.frames {
        img.save(dir.join(frame_file(f)))?;
    }
    let manifest: Vec<serde_json::Value> = corpus
        .videos
        .iter()
        .map(|v| {
            serde_json::json!({
                "video_id": v.video_id,
                "author_id": v.author_id,
                "upload_time": format_timestamp(v.upload_time),
                "title": v.title,
                "description": v.description,
                "view_count": v.view_count,
                "frames": v.frames,
            })
        })
        .collect();
    crate::corpus::write_jsonl(&dir.join("manifest.jsonl"), &manifest)?;
    crate::corpus::write_jsonl(&dir.join("labels.jsonl"), &corpus.labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_and_labels() {
        let spec = ImageCorpusSpec::default();
        let c = generate_image_corpus(&spec, 1).unwrap();
        assert_eq!(c.frames.len(), 500);
        assert_eq!(c.groups.len(), 50);
        for g in &c.groups {
            assert_eq!(g.len(), 6);
            let vids: BTreeSet<&str> = g.iter().map(|f| f.video_id.as_str()).collect();
            assert_eq!(vids.len(), 6);
        }
        let pos = c.labels.iter().filter(|l| l.duplicate).count();
        assert_eq!(pos, 750);
        assert_eq!(c.labels.len(), 750 * 3);
    }

    #[test]
    fn deterministic() {
        let spec = ImageCorpusSpec {
            videos: 10,
            groups: 2,
            copies: 3,
            ..Default::default()
        };
        let a = generate_image_corpus(&spec, 9).unwrap();
        let b = generate_image_corpus(&spec, 9).unwrap();
        assert_eq!(a.frames, b.frames);
        assert_eq!(a.videos, b.videos);
    }
}
