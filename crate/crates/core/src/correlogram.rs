//! Cross-layout HSV auto-correlogram.
//!
//! Pixels are quantised into 166 perceptual HSV colours (18 hues x 3
//! saturations x 3 values, plus 4 grays). For each colour the descriptor
//! holds the probability that a pixel at L-infinity distance `d` from a
//! pixel of that colour has the same colour, averaged over the distance
//! set. It is computed separately on the central horizontal and vertical
//! stripes of the frame and the two 166-d blocks are concatenated.

use image::RgbImage;
use serde::{Deserialize, Serialize};

use crate::imgproc::{FrameRef, PreparedFrame};
use crate::matrix::Matrix;
use crate::par::{self, Exec};
use crate::{Error, Result};

pub const COLORS: usize = 166;
pub const CHROMATIC: usize = 162;
pub const FEATURE_DIM: usize = 2 * COLORS;
pub const DEFAULT_DISTANCES: [u32; 4] = [1, 3, 5, 7];

const HUE_SECTOR_DEG: f64 = 20.0;
const SV_CUTS: [f64; 2] = [0.25, 0.7];
const ACHROMATIC_SAT: f64 = 0.1;
const GRAY_CUTS: [f64; 3] = [0.25, 0.5, 0.75];

/// Maps an RGB pixel to one of the 166 quantised HSV colours.
///
/// Chromatic bins are `hue * 9 + sat * 3 + val` in `0..162`; pixels with
/// saturation below 0.1 fall into the gray bins `162..166`, darkest first.
pub fn quantize_hsv(r: u8, g: u8, b: u8) -> u8 {
    let (r, g, b) = (r as f64 / 255.0, g as f64 / 255.0, b as f64 / 255.0);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let v = max;
    let s = if max > 0.0 { (max - min) / max } else { 0.0 };
    if s < ACHROMATIC_SAT {
        let gray = GRAY_CUTS.iter().filter(|&&c| v >= c).count();
        return (CHROMATIC + gray) as u8;
    }
    let delta = max - min;
    let mut h = if max == r {
        60.0 * ((g - b) / delta)
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    if h < 0.0 {
        h += 360.0;
    }
    let hue = ((h / HUE_SECTOR_DEG) as usize).min(17);
    let level = |x: f64| SV_CUTS.iter().filter(|&&c| x >= c).count();
    (hue * 9 + level(s) * 3 + level(v)) as u8
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelogramFeature {
    values: Vec<f64>,
    l2_norm: f64,
    pub frame: Option<FrameRef>,
}

impl CorrelogramFeature {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() != FEATURE_DIM {
            return Err(Error::DimensionMismatch {
                expected: FEATURE_DIM,
                found: values.len(),
            });
        }
        let l2_norm = l2_norm(&values);
        Ok(CorrelogramFeature {
            values,
            l2_norm,
            frame: None,
        })
    }

    pub fn with_frame(mut self, frame: FrameRef) -> Self {
        self.frame = Some(frame);
        self
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm
    }

    pub fn horizontal_block(&self) -> &[f64] {
        &self.values[..COLORS]
    }

    pub fn vertical_block(&self) -> &[f64] {
        &self.values[COLORS..]
    }
}

fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Coordinate-wise maximum over a feature collection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollectionMaxFeature {
    pub values: Vec<f64>,
}

impl CollectionMaxFeature {
    pub fn l2_norm(&self) -> f64 {
        l2_norm(&self.values)
    }

    /// Merges another partial maximum (associative, commutative).
    pub fn merge(&mut self, other: &CollectionMaxFeature) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a = a.max(*b);
        }
    }
}

pub fn collection_max<'a, I>(features: I) -> Result<CollectionMaxFeature>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut it = features.into_iter();
    let first = it.next().ok_or(Error::Empty("feature stream"))?;
    let mut max = CollectionMaxFeature { values: first.to_vec() };
    for f in it {
        if f.len() != max.values.len() {
            return Err(Error::DimensionMismatch {
                expected: max.values.len(),
                found: f.len(),
            });
        }
        for (a, &b) in max.values.iter_mut().zip(f) {
            *a = a.max(b);
        }
    }
    Ok(max)
}

/// Parallel collection maximum over the rows of a feature matrix.
pub fn collection_max_matrix(exec: Exec, features: &Matrix) -> Result<CollectionMaxFeature> {
    if features.rows() == 0 {
        return Err(Error::Empty("feature stream"));
    }
    let rows: Vec<usize> = (0..features.rows()).collect();
    let cols = features.cols();
    let values = par::fold_chunks(
        exec,
        &rows,
        256,
        || vec![f64::NEG_INFINITY; cols],
        |acc, _, &r| {
            for (a, &b) in acc.iter_mut().zip(features.row(r)) {
                *a = a.max(b as f64);
            }
        },
        |acc, part| {
            for (a, b) in acc.iter_mut().zip(part) {
                *a = a.max(b);
            }
        },
    );
    Ok(CollectionMaxFeature { values })
}

/// Length of the centred stripe across a side of length `n`: a third of
/// the side, widened by one where needed so that the margins on both sides
/// are equal.
fn stripe_extent(n: u32) -> (u32, u32) {
    let mut len = ((n as f64) / 3.0).round() as u32;
    if (n - len) % 2 == 1 {
        len += 1;
    }
    ((n - len) / 2, len)
}

pub fn extract(frame: &PreparedFrame, distances: &[u32]) -> Result<CorrelogramFeature> {
    if frame.blank {
        return Err(Error::InvalidInput("blank frames carry no correlogram".into()));
    }
    extract_image(&frame.image, distances)
}

/// Cross-layout auto-correlogram of an RGB raster.
pub fn extract_image(image: &RgbImage, distances: &[u32]) -> Result<CorrelogramFeature> {
    if distances.is_empty() || distances.contains(&0) {
        return Err(Error::InvalidInput("distance set must be non-empty and positive".into()));
    }
    let (w, h) = image.dimensions();
    let colors: Vec<u8> = image.pixels().map(|p| quantize_hsv(p.0[0], p.0[1], p.0[2])).collect();
    let (y0, sh) = stripe_extent(h);
    let (x0, sw) = stripe_extent(w);
    if sh <= 1 || sw <= 1 || w <= 1 || h <= 1 {
        return Err(Error::DegenerateFrame(format!("{w}x{h} frame leaves a stripe of at most one pixel")));
    }
    let horizontal: Vec<u8> = (y0..y0 + sh)
        .flat_map(|y| colors[(y * w) as usize..((y + 1) * w) as usize].iter().copied())
        .collect();
    let vertical: Vec<u8> = (0..h)
        .flat_map(|y| colors[(y * w + x0) as usize..(y * w + x0 + sw) as usize].iter().copied())
        .collect();
    let mut values = auto_correlogram(&horizontal, w as usize, sh as usize, distances);
    values.extend(auto_correlogram(&vertical, sw as usize, h as usize, distances));
    CorrelogramFeature::new(values)
}

/// Per-colour same-colour probability at each L-infinity distance, averaged
/// over `distances`. Pairs are only counted inside the raster and each
/// probability is normalised by the number of pairs actually counted.
pub fn auto_correlogram(colors: &[u8], w: usize, h: usize, distances: &[u32]) -> Vec<f64> {
    let nd = distances.len();
    let mut hits = vec![0u64; COLORS * nd];
    let mut totals = vec![0u64; COLORS * nd];
    for y in 0..h {
        for x in 0..w {
            let c = colors[y * w + x];
            for (k, &d) in distances.iter().enumerate() {
                let (hit, total) = ring_counts(colors, w, h, x, y, d as usize, c);
                hits[c as usize * nd + k] += hit;
                totals[c as usize * nd + k] += total;
            }
        }
    }
    (0..COLORS)
        .map(|c| {
            let mut sum = 0.0;
            let mut used = 0usize;
            for k in 0..nd {
                let t = totals[c * nd + k];
                if t > 0 {
                    sum += hits[c * nd + k] as f64 / t as f64;
                    used += 1;
                }
            }
            if used == 0 {
                0.0
            } else {
                sum / used as f64
            }
        })
        .collect()
}

/// Same-colour hits and in-bounds pixel count on the L-infinity ring of
/// radius `d` around `(x, y)`.
fn ring_counts(colors: &[u8], w: usize, h: usize, x: usize, y: usize, d: usize, c: u8) -> (u64, u64) {
    let mut hit = 0u64;
    let mut total = 0u64;
    let xl = x.saturating_sub(d);
    let xr = (x + d).min(w - 1);
    let mut scan_row = |yy: usize| {
        let row = &colors[yy * w + xl..=yy * w + xr];
        total += row.len() as u64;
        hit += row.iter().filter(|&&v| v == c).count() as u64;
    };
    if y >= d {
        scan_row(y - d);
    }
    if y + d < h {
        scan_row(y + d);
    }
    let yt = (y + 1).saturating_sub(d);
    let yb = (y + d - 1).min(h - 1);
    for xx in [x.checked_sub(d), (x + d < w).then_some(x + d)].into_iter().flatten() {
        for yy in yt..=yb {
            total += 1;
            hit += (colors[yy * w + xx] == c) as u64;
        }
    }
    (hit, total)
}

/// Extracts features for a batch of prepared frames in parallel.
pub fn extract_batch(exec: Exec, frames: &[PreparedFrame], distances: &[u32]) -> Vec<Result<CorrelogramFeature>> {
    par::map(exec, frames, |f| extract(f, distances))
}

/// Packs features into an `f32` matrix for indexing and storage.
pub fn to_matrix(features: &[CorrelogramFeature]) -> Result<Matrix> {
    Matrix::from_f64_rows(&features.iter().map(|f| f.values()).collect::<Vec<_>>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::Rgb;

    #[test]
    fn gray_extremes() {
        assert_eq!(quantize_hsv(0, 0, 0), 162);
        assert_eq!(quantize_hsv(255, 255, 255), 165);
        assert_eq!(quantize_hsv(100, 100, 100), 163);
    }

    #[test]
    fn saturated_red_bin() {
        // h = 0 -> sector 0; s = 1 and v = 1 -> top level (2) for both
        assert_eq!(quantize_hsv(255, 0, 0), 2 * 3 + 2);
        // pure green: h = 120 -> sector 6
        assert_eq!(quantize_hsv(0, 255, 0), 6 * 9 + 8);
    }

    #[test]
    fn quantizer_covers_range() {
        let mut seen = [false; COLORS];
        for r in (0..=255).step_by(5) {
            for g in (0..=255).step_by(5) {
                for b in (0..=255).step_by(5) {
                    seen[quantize_hsv(r as u8, g as u8, b as u8) as usize] = true;
                }
            }
        }
        let unreached: Vec<usize> = (0..COLORS).filter(|&i| !seen[i]).collect();
        assert!(unreached.is_empty(), "unreached bins: {unreached:?}");
    }

    #[test]
    fn uniform_frame_is_indicator() {
        let img = RgbImage::from_pixel(48, 36, Rgb([200, 30, 30]));
        let f = extract_image(&img, &DEFAULT_DISTANCES).unwrap();
        let c = quantize_hsv(200, 30, 30) as usize;
        for (i, &v) in f.values().iter().enumerate() {
            let expect = if i == c || i == COLORS + c { 1.0 } else { 0.0 };
            assert_eq!(v, expect, "coordinate {i}");
        }
        assert_eq!(f.values().len(), 332);
    }

    #[test]
    fn stripes_are_centred() {
        for n in 16..200 {
            let (s, len) = stripe_extent(n);
            assert_eq!(s, n - s - len, "n={n}");
            assert!(len as f64 >= n as f64 / 3.0 - 0.5);
        }
    }

    #[test]
    fn degenerate_inputs() {
        let img = RgbImage::from_pixel(3, 2, Rgb([1, 2, 3]));
        assert!(extract_image(&img, &[1]).is_err());
        let ok = RgbImage::from_pixel(16, 16, Rgb([1, 2, 3]));
        assert!(extract_image(&ok, &[]).is_err());
        let blank = PreparedFrame { image: ok, blank: true, border_removed: false };
        assert!(extract(&blank, &[1]).is_err());
    }

    #[test]
    fn collection_max_rules() {
        assert!(collection_max(std::iter::empty::<&[f64]>()).is_err());
        let e1 = [1.0, 0.0];
        let e2 = [0.0, 1.0];
        assert_eq!(collection_max([&e1[..]]).unwrap().values, vec![1.0, 0.0]);
        assert_eq!(collection_max([&e1[..], &e2[..]]).unwrap().values, vec![1.0, 1.0]);
    }
}
