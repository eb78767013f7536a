use image::imageops::{self, FilterType};
use image::{Rgb, RgbImage};
use serde::{Deserialize, Serialize};

use super::check_size;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrepOptions {
    /// Frames whose 8-bin grayscale entropy (bits) falls below this are blank.
    pub blank_entropy: f64,
    /// Edge rows/columns with per-channel variance below this are border.
    pub border_var: f64,
    /// Contrast limit, as a multiple of the mean tile histogram height.
    pub clip_limit: f64,
    /// Equalisation tile grid per side.
    pub tiles: u32,
    /// Output width; `None` keeps the width after border removal.
    pub target_width: Option<u32>,
}

impl Default for PrepOptions {
    fn default() -> Self {
        PrepOptions {
            blank_entropy: 1.0,
            border_var: 25.0,
            clip_limit: 2.0,
            tiles: 8,
            target_width: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PreparedFrame {
    pub image: RgbImage,
    pub blank: bool,
    pub border_removed: bool,
}

/// Runs the keyframe normalisation chain: blank test, uniform border
/// removal, 4:3 aspect normalisation, 3x3 median filter, and
/// contrast-limited adaptive equalisation of luminance.
///
/// Blank frames are flagged and returned after aspect normalisation only.
pub fn prepare_frame(frame: &RgbImage, options: &PrepOptions) -> Result<PreparedFrame> {
    check_size(frame)?;
    if gray_entropy(frame) < options.blank_entropy {
        return Ok(PreparedFrame {
            image: normalize_aspect(frame.clone(), options.target_width),
            blank: true,
            border_removed: false,
        });
    }
    let (x0, y0, w, h) = strip_uniform_borders(frame, options.border_var);
    if w < super::MIN_SIDE || h < super::MIN_SIDE {
        return Err(Error::DegenerateFrame(format!("{w}x{h} left after border removal")));
    }
    let border_removed = (w, h) != frame.dimensions();
    let cropped = if border_removed {
        imageops::crop_imm(frame, x0, y0, w, h).to_image()
    } else {
        frame.clone()
    };
    let resized = normalize_aspect(cropped, options.target_width);
    let denoised = median3x3(&resized);
    let image = clahe_luma(&denoised, options.clip_limit, options.tiles);
    Ok(PreparedFrame {
        image,
        blank: false,
        border_removed,
    })
}

fn luma(p: &Rgb<u8>) -> f64 {
    0.299 * p.0[0] as f64 + 0.587 * p.0[1] as f64 + 0.114 * p.0[2] as f64
}

/// Shannon entropy in bits of the 8-bin grayscale histogram.
pub fn gray_entropy(image: &RgbImage) -> f64 {
    let mut hist = [0usize; 8];
    for p in image.pixels() {
        let g = luma(p).round().clamp(0.0, 255.0) as usize;
        hist[g >> 5] += 1;
    }
    let n = (image.width() * image.height()) as f64;
    hist.iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

fn line_is_uniform<I: Iterator<Item = Rgb<u8>>>(pixels: I, max_var: f64) -> bool {
    let mut n = 0.0;
    let mut sum = [0.0f64; 3];
    let mut sq = [0.0f64; 3];
    for p in pixels {
        n += 1.0;
        for c in 0..3 {
            let v = p.0[c] as f64;
            sum[c] += v;
            sq[c] += v * v;
        }
    }
    (0..3).all(|c| {
        let mean = sum[c] / n;
        sq[c] / n - mean * mean < max_var
    })
}

/// Returns `(x, y, width, height)` of the region left after peeling
/// uniform rows from the top and bottom, then uniform columns from the
/// left and right.
pub fn strip_uniform_borders(image: &RgbImage, max_var: f64) -> (u32, u32, u32, u32) {
    let (w, h) = image.dimensions();
    let row = |y: u32, x0: u32, x1: u32| (x0..x1).map(move |x| *image.get_pixel(x, y));
    let col = |x: u32, y0: u32, y1: u32| (y0..y1).map(move |y| *image.get_pixel(x, y));
    let mut top = 0;
    while top < h && line_is_uniform(row(top, 0, w), max_var) {
        top += 1;
    }
    let mut bottom = h;
    while bottom > top && line_is_uniform(row(bottom - 1, 0, w), max_var) {
        bottom -= 1;
    }
    if top >= bottom {
        return (0, 0, w, 0);
    }
    let mut left = 0;
    while left < w && line_is_uniform(col(left, top, bottom), max_var) {
        left += 1;
    }
    let mut right = w;
    while right > left && line_is_uniform(col(right - 1, top, bottom), max_var) {
        right -= 1;
    }
    (left, top, right - left, bottom - top)
}

fn normalize_aspect(image: RgbImage, target_width: Option<u32>) -> RgbImage {
    let w = target_width.unwrap_or(image.width());
    let h = ((w as f64) * 3.0 / 4.0).round().max(1.0) as u32;
    if (w, h) == image.dimensions() {
        image
    } else {
        imageops::resize(&image, w, h, FilterType::Triangle)
    }
}

/// Per-channel 3x3 median with replicated edges.
pub fn median3x3(image: &RgbImage) -> RgbImage {
    let (w, h) = image.dimensions();
    let mut out = RgbImage::new(w, h);
    let mut win = [0u8; 9];
    for y in 0..h {
        for x in 0..w {
            let mut px = [0u8; 3];
            for (c, slot) in px.iter_mut().enumerate() {
                let mut k = 0;
                for dy in [-1i64, 0, 1] {
                    for dx in [-1i64, 0, 1] {
                        let sx = (x as i64 + dx).clamp(0, w as i64 - 1) as u32;
                        let sy = (y as i64 + dy).clamp(0, h as i64 - 1) as u32;
                        win[k] = image.get_pixel(sx, sy).0[c];
                        k += 1;
                    }
                }
                win.sort_unstable();
                *slot = win[4];
            }
            out.put_pixel(x, y, Rgb(px));
        }
    }
    out
}

/// Contrast-limited adaptive histogram equalisation on luminance.
///
/// Each tile's 256-bin luma histogram is clipped at `clip_limit` times its
/// mean bin height, the excess is spread evenly over all bins, and the
/// per-tile mappings are bilinearly interpolated between tile centres. The
/// luma change is added to all three channels, which leaves the chroma
/// differences untouched.
pub fn clahe_luma(image: &RgbImage, clip_limit: f64, tiles: u32) -> RgbImage {
    let (w, h) = image.dimensions();
    let tx = tiles.clamp(1, (w / 2).max(1));
    let ty = tiles.clamp(1, (h / 2).max(1));
    let lum: Vec<f64> = image.pixels().map(luma).collect();
    let bounds = |n: u32, t: u32| -> Vec<u32> { (0..=t).map(|i| (i as u64 * n as u64 / t as u64) as u32).collect() };
    let xb = bounds(w, tx);
    let yb = bounds(h, ty);

    let mut luts = vec![[0f64; 256]; (tx * ty) as usize];
    for j in 0..ty {
        for i in 0..tx {
            let mut hist = [0f64; 256];
            for y in yb[j as usize]..yb[j as usize + 1] {
                for x in xb[i as usize]..xb[i as usize + 1] {
                    let l = lum[(y * w + x) as usize].round().clamp(0.0, 255.0) as usize;
                    hist[l] += 1.0;
                }
            }
            let area: f64 = hist.iter().sum();
            let limit = (clip_limit * area / 256.0).max(1.0);
            let mut excess = 0.0;
            for v in hist.iter_mut() {
                if *v > limit {
                    excess += *v - limit;
                    *v = limit;
                }
            }
            let add = excess / 256.0;
            let lut = &mut luts[(j * tx + i) as usize];
            let mut cdf = 0.0;
            for (b, v) in hist.iter().enumerate() {
                cdf += v + add;
                lut[b] = cdf * 255.0 / area;
            }
        }
    }

    // tile centre coordinates for interpolation
    let centres = |b: &[u32]| -> Vec<f64> { b.windows(2).map(|p| (p[0] + p[1]) as f64 / 2.0 - 0.5).collect() };
    let cx = centres(&xb);
    let cy = centres(&yb);
    let locate = |c: &[f64], v: f64| -> (usize, usize, f64) {
        if v <= c[0] {
            return (0, 0, 0.0);
        }
        let last = c.len() - 1;
        if v >= c[last] {
            return (last, last, 0.0);
        }
        let k = c.partition_point(|&x| x <= v) - 1;
        (k, k + 1, (v - c[k]) / (c[k + 1] - c[k]))
    };

    let mut out = RgbImage::new(w, h);
    for y in 0..h {
        let (y0, y1, fy) = locate(&cy, y as f64);
        for x in 0..w {
            let (x0, x1, fx) = locate(&cx, x as f64);
            let l = lum[(y * w + x) as usize];
            let bin = l.round().clamp(0.0, 255.0) as usize;
            let at = |ti: usize, tj: usize| luts[tj * tx as usize + ti][bin];
            let top = at(x0, y0) * (1.0 - fx) + at(x1, y0) * fx;
            let bot = at(x0, y1) * (1.0 - fx) + at(x1, y1) * fx;
            let mapped = top * (1.0 - fy) + bot * fy;
            let delta = mapped - l;
            let p = image.get_pixel(x, y).0;
            let adj = |v: u8| (v as f64 + delta).round().clamp(0.0, 255.0) as u8;
            out.put_pixel(x, y, Rgb([adj(p[0]), adj(p[1]), adj(p[2])]));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn textured(w: u32, h: u32) -> RgbImage {
        RgbImage::from_fn(w, h, |x, y| {
            let r = (x * 255 / w) as u8;
            let g = (y * 255 / h) as u8;
            let b = (((x / 7) + (y / 5)) % 2 * 120 + 40) as u8;
            Rgb([r, g, b])
        })
    }

    #[test]
    fn black_frame_is_blank() {
        let f = prepare_frame(&RgbImage::new(64, 48), &PrepOptions::default()).unwrap();
        assert!(f.blank);
        assert_eq!(gray_entropy(&RgbImage::new(64, 48)), 0.0);
    }

    #[test]
    fn normalized_frame_keeps_dimensions() {
        let f = prepare_frame(&textured(640, 480), &PrepOptions::default()).unwrap();
        assert!(!f.blank);
        assert!(!f.border_removed);
        assert_eq!(f.image.dimensions(), (640, 480));
    }

    #[test]
    fn bordered_frame_matches_borderless() {
        let inner = textured(160, 120);
        let mut framed = RgbImage::new(200, 160);
        imageops::replace(&mut framed, &inner, 20, 20);
        let opts = PrepOptions::default();
        let a = prepare_frame(&framed, &opts).unwrap();
        let b = prepare_frame(&inner, &opts).unwrap();
        assert!(a.border_removed);
        assert_eq!(a.image.dimensions(), b.image.dimensions());
        let worst = a
            .image
            .as_raw()
            .iter()
            .zip(b.image.as_raw())
            .map(|(x, y)| (*x as i32 - *y as i32).abs())
            .max()
            .unwrap();
        assert!(worst <= 2, "max per-pixel difference {worst}");
    }

    #[test]
    fn border_crop_to_sliver_is_degenerate() {
        let mut img = RgbImage::new(64, 64);
        for y in 0..64 {
            for x in 26..38 {
                let v = ((x * 53 + y * 97) % 256) as u8;
                img.put_pixel(x, y, Rgb([v, v.wrapping_mul(3), v.wrapping_add(90)]));
            }
        }
        let err = prepare_frame(&img, &PrepOptions::default()).unwrap_err();
        assert!(matches!(err, Error::DegenerateFrame(_)));
    }

    #[test]
    fn aspect_is_normalized() {
        let f = prepare_frame(&textured(320, 180), &PrepOptions::default()).unwrap();
        assert_eq!(f.image.dimensions(), (320, 240));
        let g = prepare_frame(
            &textured(320, 180),
            &PrepOptions {
                target_width: Some(160),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(g.image.dimensions(), (160, 120));
    }

    #[test]
    fn median_removes_salt_noise() {
        let mut img = RgbImage::from_pixel(9, 9, Rgb([100, 100, 100]));
        img.put_pixel(4, 4, Rgb([255, 0, 255]));
        let m = median3x3(&img);
        assert_eq!(m.get_pixel(4, 4).0, [100, 100, 100]);
    }

    #[test]
    fn clahe_stretches_low_contrast() {
        let img = RgbImage::from_fn(64, 48, |x, _| {
            let v = 100 + (x % 20) as u8;
            Rgb([v, v, v])
        });
        let out = clahe_luma(&img, 2.0, 8);
        let span = |im: &RgbImage| {
            let v: Vec<u8> = im.pixels().map(|p| p.0[0]).collect();
            v.iter().max().unwrap() - v.iter().min().unwrap()
        };
        assert!(span(&out) > span(&img));
    }
}
