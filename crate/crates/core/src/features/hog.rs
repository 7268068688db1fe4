use serde::{Deserialize, Serialize};

use super::{centered_gradients, DescriptorKind, FeatureError, FeatureVector, Result};
use crate::imaging::Image;

/// Dalal-Triggs style HOG layout. Orientations are unsigned over [0, 180).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HogParams {
    /// Cell side in pixels.
    pub cell: usize,
    /// Block side in cells.
    pub block: usize,
    pub bins: usize,
    /// Block step in cells.
    pub block_stride: usize,
    pub norm_epsilon: f64,
}

impl Default for HogParams {
    fn default() -> Self {
        Self {
            cell: 8,
            block: 2,
            bins: 9,
            block_stride: 1,
            norm_epsilon: 1e-6,
        }
    }
}

impl HogParams {
    /// Blocks across and down for a `width`x`height` window.
    pub fn block_grid(&self, width: usize, height: usize) -> Result<(usize, usize)> {
        if self.cell == 0 || self.block == 0 || self.block_stride == 0 || self.bins < 2 {
            return Err(FeatureError::InvalidParams(format!("{self:?}")));
        }
        if !(self.norm_epsilon > 0.0) {
            return Err(FeatureError::InvalidParams("norm_epsilon must be positive".into()));
        }
        if width % self.cell != 0 || height % self.cell != 0 {
            return Err(FeatureError::Indivisible {
                width,
                height,
                cell: self.cell,
            });
        }
        let (cx, cy) = (width / self.cell, height / self.cell);
        if cx < self.block || cy < self.block {
            return Err(FeatureError::InvalidParams(format!(
                "{width}x{height} window is smaller than one block"
            )));
        }
        if (cx - self.block) % self.block_stride != 0 || (cy - self.block) % self.block_stride != 0 {
            return Err(FeatureError::InvalidParams(format!(
                "block stride {} does not tile {cx}x{cy} cells",
                self.block_stride
            )));
        }
        Ok((
            (cx - self.block) / self.block_stride + 1,
            (cy - self.block) / self.block_stride + 1,
        ))
    }
}

/// Descriptor length for a window, or the validation error.
pub fn hog_length(width: usize, height: usize, params: &HogParams) -> Result<usize> {
    let (bx, by) = params.block_grid(width, height)?;
    Ok(bx * by * params.block * params.block * params.bins)
}

pub fn hog_descriptor(img: &Image, params: &HogParams) -> Result<FeatureVector> {
    if img.channels() != 1 {
        return Err(FeatureError::NotGray(img.channels()));
    }
    let (w, h) = (img.width(), img.height());
    let (blocks_x, blocks_y) = params.block_grid(w, h)?;
    let (cells_x, cells_y) = (w / params.cell, h / params.cell);
    debug_assert!(cells_y >= params.block);
    let bins = params.bins;
    let bin_width = 180.0 / bins as f64;

    let (gx, gy) = centered_gradients(img);
    let mut cells = vec![0.0f64; cells_x * cells_y * bins];
    for y in 0..h {
        for x in 0..w {
            let (dx, dy) = (gx[y * w + x], gy[y * w + x]);
            let mag = dx.hypot(dy);
            if mag == 0.0 {
                continue;
            }
            let mut angle = dy.atan2(dx).to_degrees();
            if angle < 0.0 {
                angle += 180.0;
            }
            if angle >= 180.0 {
                angle -= 180.0;
            }
            // Bin i is centered on i * bin_width; votes split linearly
            // between the two nearest centers, wrapping at 180.
            let pos = angle / bin_width;
            let lo = pos.floor();
            let frac = pos - lo;
            let b0 = (lo as usize) % bins;
            let b1 = (b0 + 1) % bins;
            let cell = (y / params.cell) * cells_x + x / params.cell;
            cells[cell * bins + b0] += mag * (1.0 - frac);
            cells[cell * bins + b1] += mag * frac;
        }
    }

    let block_len = params.block * params.block * bins;
    let mut out = Vec::with_capacity(blocks_x * blocks_y * block_len);
    let mut block = Vec::with_capacity(block_len);
    for by in 0..blocks_y {
        for bx in 0..blocks_x {
            block.clear();
            for cy in 0..params.block {
                for cx in 0..params.block {
                    let cell_y = by * params.block_stride + cy;
                    let cell_x = bx * params.block_stride + cx;
                    let start = (cell_y * cells_x + cell_x) * bins;
                    block.extend_from_slice(&cells[start..start + bins]);
                }
            }
            let norm = (block.iter().map(|v| v * v).sum::<f64>() + params.norm_epsilon).sqrt();
            out.extend(block.iter().map(|v| v / norm));
        }
    }
    debug_assert_eq!(out.len(), blocks_x * blocks_y * block_len);
    Ok(FeatureVector::new(out, DescriptorKind::Hog))
}
