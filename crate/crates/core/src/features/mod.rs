//! Classical feature extraction: HOG, Hu moments, Harris keypoints and PCA.

mod harris;
mod hog;
mod hu;
mod pca;

pub use harris::{harris_keypoints, harris_response, Keypoint, KeypointSet, DEFAULT_BUDGET};
pub use hog::{hog_descriptor, hog_length, HogParams};
pub use hu::{hu_moments, raw_moment};
pub use pca::{pca_apply, pca_fit, symmetric_eigen, PcaBasis};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeatureError {
    #[error("expected a 1-channel image, got {0} channels")]
    NotGray(usize),
    #[error("{width}x{height} window is not divisible by cell size {cell}")]
    Indivisible {
        width: usize,
        height: usize,
        cell: usize,
    },
    #[error("invalid HOG parameters: {0}")]
    InvalidParams(String),
    #[error("image has zero total intensity")]
    ZeroMass,
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("vector length {found} does not match expected {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("requested {k} components from {dim}-dimensional data")]
    TooManyComponents { k: usize, dim: usize },
}

pub type Result<T> = std::result::Result<T, FeatureError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DescriptorKind {
    Hog,
    Hu,
    Pca,
    Raw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub kind: DescriptorKind,
}

impl FeatureVector {
    pub fn new(values: Vec<f64>, kind: DescriptorKind) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self { values, kind }
    }

    pub fn raw(values: Vec<f64>) -> Self {
        Self::new(values, DescriptorKind::Raw)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// One CSV row, values in shortest round-trip form.
    pub fn to_csv_row(&self) -> String {
        self.values
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// Centered-difference gradients with replicated borders, in sample units.
pub(crate) fn centered_gradients(img: &crate::imaging::Image) -> (Vec<f64>, Vec<f64>) {
    let (w, h) = (img.width(), img.height());
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let (xi, yi) = (x as isize, y as isize);
            gx[y * w + x] = img.get_clamped(xi + 1, yi, 0) as f64 - img.get_clamped(xi - 1, yi, 0) as f64;
            gy[y * w + x] = img.get_clamped(xi, yi + 1, 0) as f64 - img.get_clamped(xi, yi - 1, 0) as f64;
        }
    }
    (gx, gy)
}
