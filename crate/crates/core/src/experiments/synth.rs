use std::f64::consts::PI;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{io_err, write_manifest, ExperimentError, ManifestEntry, Result, MANIFEST_FILE};
use crate::imaging::{write_pnm_file, BoundingBox, Image, STANDARD_HEIGHT, STANDARD_WIDTH};

pub const DEFAULT_CLASSES: [&str; 6] = ["plastic", "wood", "metal", "paper", "cardboard", "trash"];

/// Synthetic corpus description. Image `k` shows class `k % classes.len()`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenSpec {
    pub classes: Vec<String>,
    pub per_class: usize,
    pub image_size: (usize, usize),
    /// Inclusive range; the first object is the labeled one.
    pub objects_per_image: (usize, usize),
    pub seed: u64,
}

impl Default for GenSpec {
    fn default() -> Self {
        Self {
            classes: DEFAULT_CLASSES.iter().map(|s| s.to_string()).collect(),
            per_class: 50,
            image_size: (STANDARD_WIDTH, STANDARD_HEIGHT),
            objects_per_image: (1, 5),
            seed: 0,
        }
    }
}

impl GenSpec {
    pub fn validate(&self) -> Result<()> {
        if self.classes.is_empty() || self.per_class == 0 {
            return Err(ExperimentError::Config("need at least one class and one image per class".into()));
        }
        let mut names = self.classes.clone();
        names.sort();
        names.dedup();
        if names.len() != self.classes.len() {
            return Err(ExperimentError::Config("class names must be unique".into()));
        }
        let (lo, hi) = self.objects_per_image;
        if lo == 0 || lo > hi {
            return Err(ExperimentError::Config(format!("objects per image {lo}..={hi}")));
        }
        if self.image_size.0 < 32 || self.image_size.1 < 32 {
            return Err(ExperimentError::Config("images must be at least 32x32".into()));
        }
        Ok(())
    }

    pub fn total(&self) -> usize {
        self.classes.len() * self.per_class
    }
}

/// Renders every image into `out_dir` as PPM and writes `manifest.jsonl`.
pub fn generate_dataset(spec: &GenSpec, out_dir: impl AsRef<Path>) -> Result<Vec<ManifestEntry>> {
    spec.validate()?;
    let out_dir = out_dir.as_ref();
    std::fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, e))?;
    let mut entries = Vec::with_capacity(spec.total());
    for k in 0..spec.total() {
        let class = k % spec.classes.len();
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(k as u64);
        let (img, boxes) = render_scene(spec, class, &mut rng);
        let name = format!("img_{k:04}.ppm");
        write_pnm_file(out_dir.join(&name), &img)?;
        entries.push(ManifestEntry {
            path: name,
            label: spec.classes[class].clone(),
            boxes: boxes.iter().map(|b| [b.x, b.y, b.w, b.h]).collect(),
        });
    }
    write_manifest(out_dir.join(MANIFEST_FILE), &entries)?;
    Ok(entries)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Grammar {
    Plastic,
    Wood,
    Metal,
    Paper,
    Cardboard,
    Trash,
}

impl Grammar {
    const ALL: [Grammar; 6] = [
        Grammar::Plastic,
        Grammar::Wood,
        Grammar::Metal,
        Grammar::Paper,
        Grammar::Cardboard,
        Grammar::Trash,
    ];

    fn for_class(name: &str, index: usize) -> Self {
        match name {
            "plastic" => Grammar::Plastic,
            "wood" => Grammar::Wood,
            "metal" => Grammar::Metal,
            "paper" => Grammar::Paper,
            "cardboard" => Grammar::Cardboard,
            "trash" => Grammar::Trash,
            _ => Self::ALL[index % Self::ALL.len()],
        }
    }
}

/// One water scene: the labeled object is large, distractors are small.
/// Returns the raster and one clipped box per object, labeled object first.
pub fn render_scene(spec: &GenSpec, class: usize, rng: &mut ChaCha8Rng) -> (Image, Vec<BoundingBox>) {
    let (w, h) = spec.image_size;
    let mut img = water(w, h, rng);
    let (lo, hi) = spec.objects_per_image;
    let count = rng.gen_range(lo..=hi);
    let min_dim = w.min(h) as f64;
    let mut boxes = Vec::with_capacity(count);
    for _ in 1..count {
        let g = Grammar::ALL[rng.gen_range(0..Grammar::ALL.len())];
        let r = rng.gen_range(0.03..0.06) * min_dim;
        boxes.push(draw_object(&mut img, g, r, rng));
    }
    let g = Grammar::for_class(&spec.classes[class], class);
    let r = rng.gen_range(0.18..0.27) * min_dim;
    let main = draw_object(&mut img, g, r, rng);
    boxes.insert(0, main);
    (img, boxes)
}

fn water(w: usize, h: usize, rng: &mut ChaCha8Rng) -> Image {
    let base = [
        rng.gen_range(15.0..35.0),
        rng.gen_range(55.0..85.0),
        rng.gen_range(65.0..95.0),
    ];
    let (fx, fy, phase) = (rng.gen_range(0.02..0.06), rng.gen_range(0.01..0.04), rng.gen_range(0.0..2.0 * PI));
    let mut img = Image::filled(w, h, 3, 0).expect("nonzero size");
    for y in 0..h {
        for x in 0..w {
            let wave = 8.0 * (x as f64 * fx + y as f64 * fy + phase).sin();
            let noise: f64 = rng.gen_range(-10.0..10.0);
            for (c, b) in base.iter().enumerate() {
                img.set(x, y, c, clamp_u8(b + wave + noise));
            }
        }
    }
    img
}

fn clamp_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Local-frame shape: polygon plus a shader over local `(u, v)` that maps
/// the background color to the painted color.
fn draw_object(img: &mut Image, g: Grammar, r: f64, rng: &mut ChaCha8Rng) -> BoundingBox {
    let (w, h) = (img.width() as f64, img.height() as f64);
    let cx = rng.gen_range(r * 0.6..(w - r * 0.6).max(r * 0.6 + 1.0));
    let cy = rng.gen_range(r * 0.6..(h - r * 0.6).max(r * 0.6 + 1.0));
    let angle = rng.gen_range(0.0..PI);
    let poly: Vec<(f64, f64)> = match g {
        Grammar::Plastic => blob_polygon(r, rng.gen_range(5..=7), 0.3, rng),
        Grammar::Trash => blob_polygon(r, rng.gen_range(8..=11), 0.45, rng),
        Grammar::Wood => rect(r, r * rng.gen_range(0.28..0.38)),
        Grammar::Metal => ellipse(r, r * rng.gen_range(0.6..0.9)),
        Grammar::Paper => quad(r, r * rng.gen_range(0.7..1.0), 0.08, rng),
        Grammar::Cardboard => quad(r, r * rng.gen_range(0.6..0.9), 0.03, rng),
    };
    let tint: [f64; 3] = match g {
        Grammar::Plastic => [rng.gen_range(215.0..240.0), rng.gen_range(225.0..245.0), rng.gen_range(235.0..255.0)],
        Grammar::Wood => [rng.gen_range(120.0..150.0), rng.gen_range(75.0..95.0), rng.gen_range(40.0..55.0)],
        Grammar::Paper => [rng.gen_range(235.0..250.0); 3],
        Grammar::Cardboard => [rng.gen_range(185.0..210.0), rng.gen_range(145.0..170.0), rng.gen_range(95.0..120.0)],
        Grammar::Metal | Grammar::Trash => [0.0; 3],
    };
    let period = r * rng.gen_range(0.22..0.3);
    let speckle_seed: u64 = rng.gen();
    let (sin_a, cos_a) = angle.sin_cos();
    let extent = poly.iter().fold(0.0f64, |m, &(u, v)| m.max((u * u + v * v).sqrt()));
    let x0 = (cx - extent).floor().max(0.0) as usize;
    let y0 = (cy - extent).floor().max(0.0) as usize;
    let x1 = ((cx + extent).ceil() as usize).min(img.width() - 1);
    let y1 = ((cy + extent).ceil() as usize).min(img.height() - 1);
    let (mut bx0, mut by0, mut bx1, mut by1) = (usize::MAX, usize::MAX, 0, 0);
    for y in y0..=y1 {
        for x in x0..=x1 {
            let (dx, dy) = (x as f64 + 0.5 - cx, y as f64 + 0.5 - cy);
            let u = dx * cos_a + dy * sin_a;
            let v = -dx * sin_a + dy * cos_a;
            if !inside(&poly, u, v) {
                continue;
            }
            let bg = [img.get(x, y, 0) as f64, img.get(x, y, 1) as f64, img.get(x, y, 2) as f64];
            let jitter: f64 = rng.gen_range(-6.0..6.0);
            let color: [f64; 3] = match g {
                Grammar::Plastic => {
                    // Film edges catch the light; the body lets the water through.
                    let rim = !inside(&poly, u / 0.86, v / 0.86);
                    let a = if rim { 0.92 } else { 0.5 };
                    [0, 1, 2].map(|c| a * tint[c] + (1.0 - a) * bg[c] + jitter)
                }
                Grammar::Wood => {
                    let grain = if (v * 2.0 * PI / period).sin() > 0.3 { 0.55 } else { 1.0 };
                    tint.map(|t| t * grain + jitter)
                }
                Grammar::Metal => {
                    let t = ((u / r + 1.0) / 2.0).clamp(0.0, 1.0);
                    let shine = if (v / r).abs() < 0.12 { 40.0 } else { 0.0 };
                    [35.0 + 200.0 * t.powf(1.6) + shine + jitter; 3]
                }
                Grammar::Paper => tint.map(|t| t + jitter * 0.5),
                Grammar::Cardboard => {
                    let ridge = 0.78 + 0.22 * (u * 2.0 * PI / period).sin();
                    tint.map(|t| t * ridge + jitter)
                }
                Grammar::Trash => {
                    let cell = ((u + 2.0 * r) / 7.0) as u64 * 1_000_003 + ((v + 2.0 * r) / 7.0) as u64;
                    let hsh = splitmix(speckle_seed ^ cell);
                    [0, 1, 2].map(|c| ((hsh >> (c * 8)) & 0xff) as f64)
                }
            };
            for (c, &value) in color.iter().enumerate() {
                img.set(x, y, c, clamp_u8(value));
            }
            bx0 = bx0.min(x);
            by0 = by0.min(y);
            bx1 = bx1.max(x);
            by1 = by1.max(y);
        }
    }
    if bx0 == usize::MAX {
        // Too thin to cover a pixel center; mark the center pixel.
        let (x, y) = ((cx as usize).min(img.width() - 1), (cy as usize).min(img.height() - 1));
        return BoundingBox::new(x as u32, y as u32, 1, 1);
    }
    BoundingBox::new(bx0 as u32, by0 as u32, (bx1 - bx0 + 1) as u32, (by1 - by0 + 1) as u32)
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn blob_polygon(r: f64, n: usize, jitter: f64, rng: &mut ChaCha8Rng) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let a = 2.0 * PI * (i as f64 + rng.gen_range(-0.25..0.25)) / n as f64;
            let rad = r * rng.gen_range(1.0 - jitter..1.0);
            (rad * a.cos(), rad * a.sin())
        })
        .collect()
}

fn rect(hw: f64, hh: f64) -> Vec<(f64, f64)> {
    vec![(-hw, -hh), (hw, -hh), (hw, hh), (-hw, hh)]
}

fn quad(hw: f64, hh: f64, jitter: f64, rng: &mut ChaCha8Rng) -> Vec<(f64, f64)> {
    rect(hw, hh)
        .into_iter()
        .map(|(u, v)| {
            let j = hw * jitter;
            (u + rng.gen_range(-j..=j), v + rng.gen_range(-j..=j))
        })
        .collect()
}

fn ellipse(a: f64, b: f64) -> Vec<(f64, f64)> {
    (0..32)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / 32.0;
            (a * t.cos(), b * t.sin())
        })
        .collect()
}

/// Even-odd point in polygon.
fn inside(poly: &[(f64, f64)], x: f64, y: f64) -> bool {
    let mut inside = false;
    let mut j = poly.len() - 1;
    for i in 0..poly.len() {
        let (xi, yi) = poly[i];
        let (xj, yj) = poly[j];
        if (yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi {
            inside = !inside;
        }
        j = i;
    }
    inside
}

/// Bright elliptical blobs on a dark noisy field, for segmentation checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BlobFrameSpec {
    pub width: usize,
    pub height: usize,
    pub blobs: (usize, usize),
    pub radius: (f64, f64),
}

impl Default for BlobFrameSpec {
    fn default() -> Self {
        Self {
            width: 160,
            height: 120,
            blobs: (1, 5),
            radius: (6.0, 18.0),
        }
    }
}

/// Blobs never touch: their boxes keep a 6 px gap. Returns the frame and
/// the tight box of every blob.
pub fn render_blob_frame(spec: &BlobFrameSpec, seed: u64) -> (Image, Vec<BoundingBox>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (spec.width, spec.height);
    let bg = rng.gen_range(20.0..50.0);
    let mut img = Image::from_fn(w, h, 1, |_, _, _| clamp_u8(bg + rng.gen_range(-10.0..10.0))).expect("nonzero size");
    let target = rng.gen_range(spec.blobs.0..=spec.blobs.1);
    let mut placed: Vec<(f64, f64, f64, f64)> = Vec::new();
    let gap = 6.0;
    for _ in 0..target * 50 {
        if placed.len() == target {
            break;
        }
        let (rx, ry) = (rng.gen_range(spec.radius.0..=spec.radius.1), rng.gen_range(spec.radius.0..=spec.radius.1));
        if 2.0 * rx + 4.0 > w as f64 || 2.0 * ry + 4.0 > h as f64 {
            continue;
        }
        let cx = rng.gen_range(rx + 2.0..w as f64 - rx - 2.0);
        let cy = rng.gen_range(ry + 2.0..h as f64 - ry - 2.0);
        let clear = placed
            .iter()
            .all(|&(px, py, prx, pry)| (cx - px).abs() > rx + prx + gap || (cy - py).abs() > ry + pry + gap);
        if clear {
            placed.push((cx, cy, rx, ry));
        }
    }
    let mut boxes = Vec::with_capacity(placed.len());
    for &(cx, cy, rx, ry) in &placed {
        let level = rng.gen_range(180.0..235.0);
        let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
        for y in 0..h {
            for x in 0..w {
                let (dx, dy) = ((x as f64 + 0.5 - cx) / rx, (y as f64 + 0.5 - cy) / ry);
                if dx * dx + dy * dy <= 1.0 {
                    img.set(x, y, 0, clamp_u8(level + rng.gen_range(-10.0..10.0)));
                    x0 = x0.min(x);
                    y0 = y0.min(y);
                    x1 = x1.max(x);
                    y1 = y1.max(y);
                }
            }
        }
        boxes.push(BoundingBox::new(x0 as u32, y0 as u32, (x1 - x0 + 1) as u32, (y1 - y0 + 1) as u32));
    }
    (img, boxes)
}

/// A numbered frame directory with blobs drifting across the view.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FrameSequenceSpec {
    pub frames: usize,
    pub width: usize,
    pub height: usize,
    pub objects: usize,
    pub seed: u64,
}

impl Default for FrameSequenceSpec {
    fn default() -> Self {
        Self {
            frames: 60,
            width: 160,
            height: 120,
            objects: 3,
            seed: 0,
        }
    }
}

/// Writes `frame_00000.pgm`, `frame_00001.pgm`, ... and returns the true
/// boxes per frame. Objects move at constant velocity and bounce off edges.
pub fn generate_frame_sequence(spec: &FrameSequenceSpec, out_dir: impl AsRef<Path>) -> Result<Vec<Vec<BoundingBox>>> {
    if spec.frames == 0 || spec.width < 32 || spec.height < 32 {
        return Err(ExperimentError::Config("frame sequence needs frames and at least 32x32 pixels".into()));
    }
    let out_dir = out_dir.as_ref();
    std::fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, e))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (w, h) = (spec.width as f64, spec.height as f64);
    let mut objs: Vec<[f64; 5]> = (0..spec.objects)
        .map(|_| {
            let r = rng.gen_range(5.0..10.0);
            [
                rng.gen_range(r..w - r),
                rng.gen_range(r..h - r),
                rng.gen_range(-1.5..1.5),
                rng.gen_range(-1.5..1.5),
                r,
            ]
        })
        .collect();
    let mut truth = Vec::with_capacity(spec.frames);
    for f in 0..spec.frames {
        let mut img =
            Image::from_fn(spec.width, spec.height, 1, |_, _, _| clamp_u8(35.0 + rng.gen_range(-8.0..8.0)))
                .expect("nonzero size");
        let mut boxes = Vec::with_capacity(objs.len());
        for o in &objs {
            let [cx, cy, _, _, r] = *o;
            let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
            for y in (cy - r).floor().max(0.0) as usize..((cy + r).ceil() as usize).min(spec.height) {
                for x in (cx - r).floor().max(0.0) as usize..((cx + r).ceil() as usize).min(spec.width) {
                    let (dx, dy) = (x as f64 + 0.5 - cx, y as f64 + 0.5 - cy);
                    if dx * dx + dy * dy <= r * r {
                        img.set(x, y, 0, 210);
                        x0 = x0.min(x);
                        y0 = y0.min(y);
                        x1 = x1.max(x);
                        y1 = y1.max(y);
                    }
                }
            }
            if x0 != usize::MAX {
                boxes.push(BoundingBox::new(x0 as u32, y0 as u32, (x1 - x0 + 1) as u32, (y1 - y0 + 1) as u32));
            }
        }
        write_pnm_file(out_dir.join(format!("frame_{f:05}.pgm")), &img)?;
        truth.push(boxes);
        for o in objs.iter_mut() {
            o[0] += o[2];
            o[1] += o[3];
            if o[0] < o[4] || o[0] > w - o[4] {
                o[2] = -o[2];
            }
            if o[1] < o[4] || o[1] > h - o[4] {
                o[3] = -o[3];
            }
        }
    }
    Ok(truth)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scene_boxes_fit() {
        let spec = GenSpec {
            image_size: (120, 150),
            ..GenSpec::default()
        };
        for k in 0..24 {
            let mut rng = ChaCha8Rng::seed_from_u64(k);
            let (img, boxes) = render_scene(&spec, (k % 6) as usize, &mut rng);
            assert_eq!((img.width(), img.height()), (120, 150));
            assert!(!boxes.is_empty() && boxes.len() <= 5);
            assert!(boxes.iter().all(|b| b.fits(120, 150)), "{boxes:?}");
        }
    }

    #[test]
    fn blob_boxes_are_disjoint() {
        for seed in 0..20 {
            let (img, boxes) = render_blob_frame(&BlobFrameSpec::default(), seed);
            assert!(!boxes.is_empty());
            for (i, a) in boxes.iter().enumerate() {
                assert!(a.fits(img.width(), img.height()));
                for b in &boxes[i + 1..] {
                    assert_eq!(a.intersection(b), 0);
                }
            }
        }
    }

    #[test]
    fn spec_validation() {
        let mut s = GenSpec::default();
        assert!(s.validate().is_ok());
        s.classes.push("wood".into());
        assert!(s.validate().is_err());
        let s = GenSpec {
            objects_per_image: (0, 2),
            ..GenSpec::default()
        };
        assert!(s.validate().is_err());
    }
}
