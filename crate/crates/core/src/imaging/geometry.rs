use serde::{Deserialize, Serialize};

use super::{to_sample, Image, ImageError, Result};

/// Canonical dataset raster size.
pub const STANDARD_WIDTH: usize = 400;
pub const STANDARD_HEIGHT: usize = 500;
pub const DEFAULT_TARGET_FRACTION: f64 = 0.6;

/// Axis-aligned box in pixel coordinates, top-left origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl BoundingBox {
    pub const fn new(x: u32, y: u32, w: u32, h: u32) -> Self {
        Self { x, y, w, h }
    }

    pub fn area(&self) -> u64 {
        self.w as u64 * self.h as u64
    }

    pub fn right(&self) -> u32 {
        self.x + self.w
    }

    pub fn bottom(&self) -> u32 {
        self.y + self.h
    }

    pub fn center(&self) -> (f64, f64) {
        (
            self.x as f64 + self.w as f64 / 2.0,
            self.y as f64 + self.h as f64 / 2.0,
        )
    }

    pub fn is_degenerate(&self) -> bool {
        self.w == 0 || self.h == 0
    }

    /// True when the box lies inside a `width`x`height` raster.
    pub fn fits(&self, width: usize, height: usize) -> bool {
        !self.is_degenerate()
            && self.right() as usize <= width
            && self.bottom() as usize <= height
    }

    pub fn intersection(&self, other: &BoundingBox) -> u64 {
        let x0 = self.x.max(other.x);
        let y0 = self.y.max(other.y);
        let x1 = self.right().min(other.right());
        let y1 = self.bottom().min(other.bottom());
        if x1 <= x0 || y1 <= y0 {
            0
        } else {
            (x1 - x0) as u64 * (y1 - y0) as u64
        }
    }

    pub fn iou(&self, other: &BoundingBox) -> f64 {
        let inter = self.intersection(other);
        let union = self.area() + other.area() - inter;
        if union == 0 {
            0.0
        } else {
            inter as f64 / union as f64
        }
    }
}

/// Bilinear resampling with pixel-center alignment.
pub fn resize_bilinear(img: &Image, out_w: usize, out_h: usize) -> Result<Image> {
    if out_w == 0 || out_h == 0 {
        return Err(ImageError::InvalidParameter(format!(
            "resize target {out_w}x{out_h}"
        )));
    }
    if out_w == img.width() && out_h == img.height() {
        return Ok(img.clone());
    }
    let ch = img.channels();
    let sx = img.width() as f64 / out_w as f64;
    let sy = img.height() as f64 / out_h as f64;
    let max_x = (img.width() - 1) as f64;
    let max_y = (img.height() - 1) as f64;

    let taps = |dst: usize, scale: f64, max: f64| {
        let src = ((dst as f64 + 0.5) * scale - 0.5).clamp(0.0, max);
        let i0 = src.floor();
        let frac = src - i0;
        let i0 = i0 as usize;
        let i1 = (i0 + 1).min(max as usize);
        (i0, i1, frac)
    };
    let xs: Vec<_> = (0..out_w).map(|x| taps(x, sx, max_x)).collect();

    let mut pixels = Vec::with_capacity(out_w * out_h * ch);
    for y in 0..out_h {
        let (y0, y1, fy) = taps(y, sy, max_y);
        for &(x0, x1, fx) in &xs {
            for c in 0..ch {
                let top = img.get(x0, y0, c) as f64 * (1.0 - fx) + img.get(x1, y0, c) as f64 * fx;
                let bot = img.get(x0, y1, c) as f64 * (1.0 - fx) + img.get(x1, y1, c) as f64 * fx;
                pixels.push(to_sample(top * (1.0 - fy) + bot * fy));
            }
        }
    }
    Image::new(out_w, out_h, ch, pixels)
}

/// Copy of the `w`x`h` window at signed origin `(x, y)`, replicating
/// border pixels where the window leaves the image.
pub fn crop_replicate(img: &Image, x: i64, y: i64, w: usize, h: usize) -> Result<Image> {
    Image::from_fn(w, h, img.channels(), |cx, cy, c| {
        img.get_clamped((x + cx as i64) as isize, (y + cy as i64) as isize, c)
    })
}

/// Square window `(x, y, side)` centered on the box whose side is
/// `max(w, h) / target_fraction`, rounded to whole pixels.
pub fn scale_window(bbox: &BoundingBox, target_fraction: f64) -> Result<(i64, i64, usize)> {
    if bbox.is_degenerate() {
        return Err(ImageError::DegenerateBox(*bbox));
    }
    if !(target_fraction > 0.0 && target_fraction <= 1.0) {
        return Err(ImageError::InvalidParameter(format!(
            "target fraction {target_fraction} outside (0, 1]"
        )));
    }
    let side = (bbox.w.max(bbox.h) as f64 / target_fraction).round().max(1.0);
    let (cx, cy) = bbox.center();
    let x = (cx - side / 2.0).round() as i64;
    let y = (cy - side / 2.0).round() as i64;
    Ok((x, y, side as usize))
}

/// Depth/focal-length correction: re-frame the object so it fills
/// `target_fraction` of a square window, then resize to the output size.
pub fn object_scale_normalize(
    img: &Image,
    bbox: &BoundingBox,
    target_fraction: f64,
    out_w: usize,
    out_h: usize,
) -> Result<Image> {
    let (x, y, side) = scale_window(bbox, target_fraction)?;
    let window = crop_replicate(img, x, y, side, side)?;
    resize_bilinear(&window, out_w, out_h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resize_examples() {
        let img = Image::new(2, 2, 1, vec![10, 20, 30, 40]).unwrap();
        assert_eq!(resize_bilinear(&img, 1, 1).unwrap().pixels(), &[25]);
        assert_eq!(resize_bilinear(&img, 2, 2).unwrap(), img);
        let big = resize_bilinear(&img, STANDARD_WIDTH, STANDARD_HEIGHT).unwrap();
        assert_eq!((big.width(), big.height()), (400, 500));
        assert!(resize_bilinear(&img, 0, 3).is_err());
    }

    #[test]
    fn upscale_is_monotone_on_ramp() {
        let img = Image::new(4, 1, 1, vec![0, 80, 160, 240]).unwrap();
        let up = resize_bilinear(&img, 8, 1).unwrap();
        assert!(up.pixels().windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(up.pixels()[0], 0);
        assert_eq!(up.pixels()[7], 240);
    }

    #[test]
    fn iou_arithmetic() {
        let a = BoundingBox::new(0, 0, 10, 10);
        assert_eq!(a.iou(&a), 1.0);
        let b = BoundingBox::new(5, 0, 10, 10);
        assert!((a.iou(&b) - 50.0 / 150.0).abs() < 1e-12);
        assert_eq!(a.iou(&BoundingBox::new(20, 20, 2, 2)), 0.0);
    }

    #[test]
    fn window_side_formula() {
        let b = BoundingBox::new(10, 10, 10, 10);
        assert_eq!(scale_window(&b, 0.5).unwrap(), (5, 5, 20));
        assert!(scale_window(&BoundingBox::new(0, 0, 0, 4), 0.5).is_err());
        assert!(scale_window(&b, 0.0).is_err());
    }

    #[test]
    fn scale_normalize_whole_image_is_resize() {
        let img = Image::from_fn(10, 10, 1, |x, y, _| (x * 20 + y) as u8).unwrap();
        // 6x6 box centered in a 10x10 image at fraction 0.6 -> window = image.
        let b = BoundingBox::new(2, 2, 6, 6);
        let out = object_scale_normalize(&img, &b, 0.6, 5, 5).unwrap();
        assert_eq!(out, resize_bilinear(&img, 5, 5).unwrap());
        let out = object_scale_normalize(&img, &b, 0.3, 40, 50).unwrap();
        assert_eq!((out.width(), out.height()), (40, 50));
    }

    #[test]
    fn crop_replicates_outside() {
        let img = Image::new(2, 1, 1, vec![1, 2]).unwrap();
        let c = crop_replicate(&img, -1, 0, 4, 2).unwrap();
        assert_eq!(c.pixels(), &[1, 1, 2, 2, 1, 1, 2, 2]);
    }
}
