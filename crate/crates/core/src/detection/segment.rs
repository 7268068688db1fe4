use crate::imaging::{gaussian_blur, threshold, to_grayscale, BoundingBox, FilterParams, Image};

use super::{Detection, DetectionError, Result};

/// An 8-connected foreground region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Component {
    pub bbox: BoundingBox,
    pub area: u64,
}

/// Labels 8-connected runs of non-zero samples in a 1-channel image.
/// Components come out in raster order of their first pixel.
pub fn label_components(mask: &Image) -> Result<Vec<Component>> {
    if mask.channels() != 1 {
        return Err(DetectionError::InvalidParameter("component labeling needs a 1-channel mask".into()));
    }
    let (w, h) = (mask.width(), mask.height());
    let px = mask.pixels();
    let mut seen = vec![false; w * h];
    let mut stack = Vec::new();
    let mut out = Vec::new();
    for start in 0..w * h {
        if px[start] == 0 || seen[start] {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
        let mut area = 0u64;
        while let Some(i) = stack.pop() {
            let (x, y) = (i % w, i / w);
            area += 1;
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
            for ny in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                for nx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                    let j = ny * w + nx;
                    if px[j] != 0 && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        out.push(Component {
            bbox: BoundingBox::new(x0 as u32, y0 as u32, (x1 - x0 + 1) as u32, (y1 - y0 + 1) as u32),
            area,
        });
    }
    Ok(out)
}

/// Grayscale, optional blur, threshold, then one box per component of at
/// least `min_area` pixels. Score is the component's share of the image;
/// results are sorted by score, larger first.
pub fn segment_detect(img: &Image, params: &FilterParams, min_area: u64) -> Result<Vec<Detection>> {
    params.validate()?;
    let mut gray = to_grayscale(img);
    if let Some(sigma) = params.sigma {
        gray = gaussian_blur(&gray, sigma)?;
    }
    let mask = threshold(&gray, params.threshold)?;
    let total = (img.width() * img.height()) as f64;
    let mut dets: Vec<Detection> = label_components(&mask)?
        .into_iter()
        .filter(|c| c.area >= min_area)
        .map(|c| Detection::new(c.bbox, c.area as f64 / total, None))
        .collect();
    dets.sort_by(|a, b| b.score.total_cmp(&a.score));
    Ok(dets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::Threshold;

    fn squares(size: usize) -> Image {
        Image::from_fn(64, 48, 1, |x, y, _| {
            let a = (5..5 + size).contains(&x) && (5..5 + size).contains(&y);
            let b = (40..40 + size).contains(&x) && (20..20 + size).contains(&y);
            if a || b {
                255
            } else {
                0
            }
        })
        .unwrap()
    }

    #[test]
    fn two_squares_two_tight_boxes() {
        let params = FilterParams {
            sigma: None,
            ..FilterParams::default()
        };
        let dets = segment_detect(&squares(10), &params, 50).unwrap();
        let mut boxes: Vec<_> = dets.iter().map(|d| d.bbox).collect();
        boxes.sort_by_key(|b| b.x);
        assert_eq!(boxes, vec![BoundingBox::new(5, 5, 10, 10), BoundingBox::new(40, 20, 10, 10)]);
        assert!(dets.iter().all(|d| (d.score - 100.0 / (64.0 * 48.0)).abs() < 1e-12));
    }

    #[test]
    fn black_and_small_give_nothing() {
        let params = FilterParams::default();
        assert!(segment_detect(&Image::filled(20, 20, 1, 0).unwrap(), &params, 1).unwrap().is_empty());
        let params = FilterParams {
            sigma: None,
            threshold: Threshold::Value(128),
            ..FilterParams::default()
        };
        assert!(segment_detect(&squares(5), &params, 50).unwrap().is_empty());
    }

    #[test]
    fn diagonal_neighbors_join() {
        let img = Image::from_fn(4, 4, 1, |x, y, _| if x == y { 255 } else { 0 }).unwrap();
        let comps = label_components(&img).unwrap();
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].area, 4);
        assert_eq!(comps[0].bbox, BoundingBox::new(0, 0, 4, 4));
    }
}
