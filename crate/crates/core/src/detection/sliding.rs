use serde::{Deserialize, Serialize};

use crate::classifiers::{svm_predict, LinearSvmModel};
use crate::features::{hog_descriptor, HogParams};
use crate::imaging::{crop_replicate, resize_bilinear, to_grayscale, BoundingBox, Image};

use super::{Detection, DetectionError, Result};

/// Sliding-window scan settings. A scale `s` shrinks the image by `1/s`, so
/// larger scales find larger objects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WindowScan {
    pub window: (usize, usize),
    pub stride: usize,
    pub scales: Vec<f64>,
    pub score_threshold: f64,
    /// Class whose wins are never reported, typically "background".
    pub background_class: Option<usize>,
}

impl Default for WindowScan {
    fn default() -> Self {
        Self {
            window: (64, 64),
            stride: 8,
            scales: vec![1.0, 1.5, 2.0],
            score_threshold: 0.0,
            background_class: None,
        }
    }
}

/// HOG + linear SVM scored at every window position of every scale.
/// Returns the raw list, before suppression, in original-image coordinates.
pub fn sliding_window_detect(
    img: &Image,
    model: &LinearSvmModel,
    hog: &HogParams,
    scan: &WindowScan,
) -> Result<Vec<Detection>> {
    let (ww, wh) = scan.window;
    hog.block_grid(ww, wh)?;
    if scan.stride == 0 {
        return Err(DetectionError::InvalidParameter("stride must be at least 1".into()));
    }
    if let Some(&s) = scan.scales.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
        return Err(DetectionError::InvalidParameter(format!("scale {s}")));
    }
    let gray = to_grayscale(img);
    let (iw, ih) = (img.width(), img.height());
    let mut out = Vec::new();
    for &scale in &scan.scales {
        let sw = (iw as f64 / scale).round() as usize;
        let sh = (ih as f64 / scale).round() as usize;
        if sw < ww || sh < wh {
            log::debug!("scale {scale} skipped: {sw}x{sh} is smaller than the window");
            continue;
        }
        let scaled = resize_bilinear(&gray, sw, sh)?;
        for y in (0..=sh - wh).step_by(scan.stride) {
            for x in (0..=sw - ww).step_by(scan.stride) {
                let patch = crop_replicate(&scaled, x as i64, y as i64, ww, wh)?;
                let desc = hog_descriptor(&patch, hog)?;
                let (class, scores) = svm_predict(model, &desc.values)?;
                if Some(class) == scan.background_class || scores[class] <= scan.score_threshold {
                    continue;
                }
                out.push(Detection::new(map_back(x, y, ww, wh, scale, iw, ih), scores[class], Some(class)));
            }
        }
    }
    Ok(out)
}

fn map_back(x: usize, y: usize, w: usize, h: usize, scale: f64, iw: usize, ih: usize) -> BoundingBox {
    let bx = ((x as f64 * scale).round() as usize).min(iw - 1);
    let by = ((y as f64 * scale).round() as usize).min(ih - 1);
    let bw = ((w as f64 * scale).round() as usize).clamp(1, iw - bx);
    let bh = ((h as f64 * scale).round() as usize).clamp(1, ih - by);
    BoundingBox::new(bx as u32, by as u32, bw as u32, bh as u32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::hog_length;

    fn hog16() -> HogParams {
        HogParams {
            cell: 8,
            block: 2,
            ..HogParams::default()
        }
    }

    #[test]
    fn zero_model_on_uniform_image_is_silent() {
        let img = Image::filled(64, 64, 1, 90).unwrap();
        let len = hog_length(16, 16, &hog16()).unwrap();
        let model = LinearSvmModel::zeros(2, len);
        let scan = WindowScan {
            window: (16, 16),
            score_threshold: 0.1,
            ..WindowScan::default()
        };
        assert!(sliding_window_detect(&img, &model, &hog16(), &scan).unwrap().is_empty());
    }

    #[test]
    fn single_position_grid_gives_one_detection() {
        let img = Image::from_fn(16, 16, 1, |x, _, _| (x * 16) as u8).unwrap();
        let len = hog_length(16, 16, &hog16()).unwrap();
        let mut model = LinearSvmModel::zeros(2, len);
        model.biases = vec![0.0, 1.0];
        let scan = WindowScan {
            window: (16, 16),
            scales: vec![1.0, 3.0],
            background_class: Some(0),
            ..WindowScan::default()
        };
        let dets = sliding_window_detect(&img, &model, &hog16(), &scan).unwrap();
        assert_eq!(dets.len(), 1);
        assert_eq!(dets[0].bbox, BoundingBox::new(0, 0, 16, 16));
        assert_eq!(dets[0].class_index, Some(1));
    }

    #[test]
    fn coordinates_scale_back() {
        let img = Image::filled(80, 48, 1, 10).unwrap();
        let len = hog_length(16, 16, &hog16()).unwrap();
        let mut model = LinearSvmModel::zeros(1, len);
        model.biases = vec![1.0];
        let scan = WindowScan {
            window: (16, 16),
            stride: 8,
            scales: vec![1.0, 2.0],
            ..WindowScan::default()
        };
        let dets = sliding_window_detect(&img, &model, &hog16(), &scan).unwrap();
        // scale 1: 9 x 5 positions, scale 2 (40x24): 4 x 2 positions
        assert_eq!(dets.len(), 45 + 8);
        let last = dets.last().unwrap().bbox;
        assert_eq!(last, BoundingBox::new(48, 16, 32, 32));
    }
}
