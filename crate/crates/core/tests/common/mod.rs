#![allow(dead_code)]

use debris_edge::detection::Detection;
use debris_edge::imaging::{BoundingBox, Image};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Uniform random samples.
pub fn random_image(w: usize, h: usize, c: usize, seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Image::from_fn(w, h, c, |_, _, _| rng.gen()).unwrap()
}

pub fn image_strategy(max_side: usize, channels: &'static [usize]) -> impl Strategy<Value = Image> {
    (1..=max_side, 1..=max_side, proptest::sample::select(channels)).prop_flat_map(|(w, h, c)| {
        proptest::collection::vec(any::<u8>(), w * h * c).prop_map(move |px| Image::new(w, h, c, px).unwrap())
    })
}

pub fn box_strategy(max_pos: u32, max_side: u32) -> impl Strategy<Value = BoundingBox> {
    (0..max_pos, 0..max_pos, 1..=max_side, 1..=max_side).prop_map(|(x, y, w, h)| BoundingBox::new(x, y, w, h))
}

/// Median by sorting each window, replicate borders.
pub fn median_oracle(img: &Image, k: usize) -> Image {
    let r = (k / 2) as isize;
    let mut out = img.clone();
    for y in 0..img.height() {
        for x in 0..img.width() {
            for c in 0..img.channels() {
                let mut v = Vec::new();
                for dy in -r..=r {
                    for dx in -r..=r {
                        let xx = (x as isize + dx).clamp(0, img.width() as isize - 1) as usize;
                        let yy = (y as isize + dy).clamp(0, img.height() as isize - 1) as usize;
                        v.push(img.get(xx, yy, c));
                    }
                }
                v.sort_unstable();
                out.set(x, y, c, v[v.len() / 2]);
            }
        }
    }
    out
}

/// Exhaustive Otsu in exact integer arithmetic: maximize
/// `(n0 S1 - n1 S0)^2 / (n0 n1)` over cuts `t` (class 0 is `s <= t`),
/// lowest `t` on ties.
pub fn otsu_oracle(img: &Image) -> u8 {
    let px = img.pixels();
    let mut best: Option<(u128, u128, u8)> = None;
    for t in 0..=255u8 {
        let (mut n0, mut s0, mut n1, mut s1) = (0i128, 0i128, 0i128, 0i128);
        for &p in px {
            if p <= t {
                n0 += 1;
                s0 += p as i128;
            } else {
                n1 += 1;
                s1 += p as i128;
            }
        }
        let (num, den) = if n0 == 0 || n1 == 0 {
            (0u128, 1u128)
        } else {
            let d = n0 * s1 - n1 * s0;
            ((d * d) as u128, (n0 * n1) as u128)
        };
        match best {
            Some((bn, bd, _)) if num * bd <= bn * den => {}
            _ => best = Some((num, den, t)),
        }
    }
    best.unwrap().2
}

/// Full 2-D Gaussian convolution with replicated borders, using the
/// library's 1-D kernel as the outer product.
pub fn gaussian_oracle(img: &Image, kernel: &[f64]) -> Image {
    let r = (kernel.len() / 2) as isize;
    let mut out = img.clone();
    for y in 0..img.height() {
        for x in 0..img.width() {
            for c in 0..img.channels() {
                let mut acc = 0.0;
                for (j, ky) in kernel.iter().enumerate() {
                    for (i, kx) in kernel.iter().enumerate() {
                        let xx = (x as isize + i as isize - r).clamp(0, img.width() as isize - 1) as usize;
                        let yy = (y as isize + j as isize - r).clamp(0, img.height() as isize - 1) as usize;
                        acc += kx * ky * img.get(xx, yy, c) as f64;
                    }
                }
                out.set(x, y, c, (acc + 0.5).floor().clamp(0.0, 255.0) as u8);
            }
        }
    }
    out
}

pub fn max_abs_diff(a: &Image, b: &Image) -> u8 {
    a.pixels().iter().zip(b.pixels()).map(|(x, y)| x.abs_diff(*y)).max().unwrap_or(0)
}

/// Repeatedly takes the best remaining box (lowest index on equal scores)
/// and discards everything overlapping it by more than `thr`.
pub fn nms_oracle(dets: &[Detection], thr: f64) -> Vec<Detection> {
    let mut left: Vec<usize> = (0..dets.len()).collect();
    let mut kept = Vec::new();
    while !left.is_empty() {
        let mut best = 0;
        for (pos, &i) in left.iter().enumerate() {
            if dets[i].score > dets[left[best]].score {
                best = pos;
            }
        }
        let pick = dets[left.remove(best)];
        left.retain(|&i| dets[i].bbox.iou(&pick.bbox) <= thr);
        kept.push(pick);
    }
    kept
}

/// Up to `max_len` boxes in a 64×64 field with scores drawn from a coarse
/// grid so ties occur.
pub fn detection_set_strategy(max_len: usize) -> impl Strategy<Value = Vec<Detection>> {
    proptest::collection::vec((box_strategy(48, 24), 0u8..8), 0..=max_len)
        .prop_map(|v| v.into_iter().map(|(b, s)| Detection::new(b, s as f64 / 8.0, None)).collect())
}

/// Seeded version of [`detection_set_strategy`] for fixed-count sweeps.
pub fn random_detection_set(rng: &mut impl Rng, max_len: usize) -> Vec<Detection> {
    let n = rng.gen_range(0..=max_len);
    (0..n)
        .map(|_| {
            let b = BoundingBox::new(rng.gen_range(0..48), rng.gen_range(0..48), rng.gen_range(1..=24), rng.gen_range(1..=24));
            Detection::new(b, rng.gen_range(0..8u8) as f64 / 8.0, None)
        })
        .collect()
}
