use serde::{Deserialize, Serialize};

use super::{centered_gradients, FeatureError, Result};
use crate::imaging::{gaussian_kernel, Image};

/// Default corner budget, inside the 67..=75 band that tracked floating
/// debris best.
pub const DEFAULT_BUDGET: usize = 70;
const HARRIS_K: f64 = 0.04;
const TENSOR_SIGMA: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Keypoint {
    pub x: usize,
    pub y: usize,
    pub response: f64,
}

/// Strongest-first corner set, never longer than its budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeypointSet {
    pub points: Vec<Keypoint>,
    pub budget: usize,
}

/// Harris response map `det(M) - k trace(M)^2` on gradients of the
/// image scaled to [0, 1], structure tensor weighted by a sigma-1 Gaussian.
pub fn harris_response(img: &Image) -> Result<Vec<f64>> {
    if img.channels() != 1 {
        return Err(FeatureError::NotGray(img.channels()));
    }
    let (w, h) = (img.width(), img.height());
    let (gx, gy) = centered_gradients(img);
    let scale = 1.0 / (255.0 * 255.0);
    let mut ixx: Vec<f64> = gx.iter().map(|g| g * g * scale).collect();
    let mut iyy: Vec<f64> = gy.iter().map(|g| g * g * scale).collect();
    let mut ixy: Vec<f64> = gx.iter().zip(&gy).map(|(a, b)| a * b * scale).collect();
    let kernel = gaussian_kernel(TENSOR_SIGMA).expect("positive sigma");
    for field in [&mut ixx, &mut iyy, &mut ixy] {
        *field = blur_field(field, w, h, &kernel);
    }
    Ok((0..w * h)
        .map(|i| {
            let det = ixx[i] * iyy[i] - ixy[i] * ixy[i];
            let tr = ixx[i] + iyy[i];
            det - HARRIS_K * tr * tr
        })
        .collect())
}

fn blur_field(field: &[f64], w: usize, h: usize, kernel: &[f64]) -> Vec<f64> {
    let r = (kernel.len() / 2) as isize;
    let clamp = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            tmp[y * w + x] = kernel
                .iter()
                .enumerate()
                .map(|(i, k)| k * field[y * w + clamp(x as isize + i as isize - r, w)])
                .sum();
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            out[y * w + x] = kernel
                .iter()
                .enumerate()
                .map(|(i, k)| k * tmp[clamp(y as isize + i as isize - r, h) * w + x])
                .sum();
        }
    }
    out
}

/// Positive local maxima of the Harris response (3x3 window), strongest
/// first with raster-order tie-break, truncated to `budget`.
pub fn harris_keypoints(img: &Image, budget: usize) -> Result<KeypointSet> {
    if !(67..=75).contains(&budget) {
        log::warn!("keypoint budget {budget} is outside the recommended 67..=75 band");
    }
    let response = harris_response(img)?;
    let (w, h) = (img.width(), img.height());
    let mut points = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let r = response[y * w + x];
            if r <= 0.0 {
                continue;
            }
            let mut is_max = true;
            'nbhd: for dy in -1isize..=1 {
                for dx in -1isize..=1 {
                    let (nx, ny) = (x as isize + dx, y as isize + dy);
                    if (dx, dy) == (0, 0) || nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                        continue;
                    }
                    if response[ny as usize * w + nx as usize] > r {
                        is_max = false;
                        break 'nbhd;
                    }
                }
            }
            if is_max {
                points.push(Keypoint { x, y, response: r });
            }
        }
    }
    // Stable sort keeps raster order among equal responses.
    points.sort_by(|a, b| b.response.total_cmp(&a.response));
    points.truncate(budget);
    Ok(KeypointSet { points, budget })
}
