use image::{imageops, Rgb, RgbImage};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vmeme::correlogram::{auto_correlogram, extract_image, quantize_hsv, COLORS, DEFAULT_DISTANCES, FEATURE_DIM};

/// Exhaustive pair enumeration: for every ordered pixel pair at L-infinity
/// distance exactly `d`, count whether the second shares the first's colour.
fn oracle(colors: &[u8], w: usize, h: usize, distances: &[u32]) -> Vec<f64> {
    let mut out = vec![0.0; COLORS];
    for c in 0..COLORS {
        let mut sum = 0.0;
        let mut used = 0;
        for &d in distances {
            let (mut hit, mut total) = (0u64, 0u64);
            for p in 0..w * h {
                if colors[p] as usize != c {
                    continue;
                }
                let (px, py) = ((p % w) as i64, (p / w) as i64);
                for q in 0..w * h {
                    let (qx, qy) = ((q % w) as i64, (q / w) as i64);
                    if (px - qx).abs().max((py - qy).abs()) == d as i64 {
                        total += 1;
                        hit += (colors[q] as usize == c) as u64;
                    }
                }
            }
            if total > 0 {
                sum += hit as f64 / total as f64;
                used += 1;
            }
        }
        out[c] = if used > 0 { sum / used as f64 } else { 0.0 };
    }
    out
}

fn checkerboard(n: u32, a: Rgb<u8>, b: Rgb<u8>) -> RgbImage {
    RgbImage::from_fn(n, n, |x, y| if (x + y) % 2 == 0 { a } else { b })
}

fn quantized(img: &RgbImage) -> Vec<u8> {
    img.pixels().map(|p| quantize_hsv(p.0[0], p.0[1], p.0[2])).collect()
}

#[test]
fn checkerboard_matches_pair_counting() {
    let img = checkerboard(8, Rgb([255, 0, 0]), Rgb([0, 0, 255]));
    let colors = quantized(&img);
    for distances in [&[1u32][..], &[2], &[1, 3, 5, 7]] {
        let fast = auto_correlogram(&colors, 8, 8, distances);
        let slow = oracle(&colors, 8, 8, distances);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
        }
    }
    // at d = 1 a cell's 8 neighbours hold 4 of its own colour in the interior
    let red = quantize_hsv(255, 0, 0) as usize;
    let d1 = auto_correlogram(&colors, 8, 8, &[1]);
    assert!(d1[red] > 0.0 && d1[red] < 1.0);
}

#[test]
fn uniform_frame_is_indicator() {
    let img = RgbImage::from_pixel(40, 30, Rgb([30, 160, 40]));
    let f = extract_image(&img, &DEFAULT_DISTANCES).unwrap();
    let c = quantize_hsv(30, 160, 40) as usize;
    assert_eq!(f.values().len(), FEATURE_DIM);
    for (i, &v) in f.values().iter().enumerate() {
        let expected = if i % COLORS == c { 1.0 } else { 0.0 };
        assert_eq!(v, expected, "dimension {i}");
    }
}

fn random_image(seed: u64, w: u32, h: u32) -> RgbImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // few colours so that matches occur
    let palette: Vec<Rgb<u8>> = (0..4).map(|_| Rgb([rng.random(), rng.random(), rng.random()])).collect();
    RgbImage::from_fn(w, h, |_, _| palette[rng.random_range(0..palette.len())])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn flips_are_bitwise_invariant(seed in any::<u64>(), w in 16u32..60, h in 16u32..60) {
        let img = random_image(seed, w, h);
        let f = extract_image(&img, &DEFAULT_DISTANCES).unwrap();
        let fh = extract_image(&imageops::flip_horizontal(&img), &DEFAULT_DISTANCES).unwrap();
        let fv = extract_image(&imageops::flip_vertical(&img), &DEFAULT_DISTANCES).unwrap();
        prop_assert!(f.values().iter().zip(fh.values()).all(|(a, b)| a.to_bits() == b.to_bits()));
        prop_assert!(f.values().iter().zip(fv.values()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn raster_matches_oracle(seed in any::<u64>(), w in 2usize..9, h in 2usize..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let colors: Vec<u8> = (0..w * h).map(|_| rng.random_range(0..3u8) * 50).collect();
        let fast = auto_correlogram(&colors, w, h, &[1, 2, 3]);
        let slow = oracle(&colors, w, h, &[1, 2, 3]);
        for (a, b) in fast.iter().zip(&slow) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn values_are_probabilities(seed in any::<u64>()) {
        let f = extract_image(&random_image(seed, 32, 24), &DEFAULT_DISTANCES).unwrap();
        prop_assert!(f.values().iter().all(|v| (0.0..=1.0).contains(v)));
    }
}
