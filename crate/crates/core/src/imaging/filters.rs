use serde::{Deserialize, Serialize};

use super::{resize_bilinear, to_sample, Image, ImageError, Result};

/// Fixed cut or histogram-derived Otsu cut.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Threshold {
    Value(u8),
    Otsu,
}

/// Shared knobs for the filter suite. `sigma = None` skips blurring where
/// the blur is optional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterParams {
    pub kernel_size: usize,
    pub sigma: Option<f64>,
    pub threshold: Threshold,
    pub alpha: f64,
    pub beta: f64,
    pub target_fraction: f64,
}

impl Default for FilterParams {
    fn default() -> Self {
        Self {
            kernel_size: 3,
            sigma: Some(1.0),
            threshold: Threshold::Otsu,
            alpha: 1.0,
            beta: 0.0,
            target_fraction: super::DEFAULT_TARGET_FRACTION,
        }
    }
}

impl FilterParams {
    pub fn validate(&self) -> Result<()> {
        if self.kernel_size % 2 == 0 {
            return Err(ImageError::EvenKernel(self.kernel_size));
        }
        if let Some(s) = self.sigma {
            if !(s.is_finite() && s > 0.0) {
                return Err(ImageError::InvalidSigma(s));
            }
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) || !self.beta.is_finite() {
            return Err(ImageError::InvalidParameter(format!("alpha {} beta {}", self.alpha, self.beta)));
        }
        if !(self.target_fraction > 0.0 && self.target_fraction <= 1.0) {
            return Err(ImageError::InvalidParameter(format!(
                "target fraction {} outside (0, 1]",
                self.target_fraction
            )));
        }
        Ok(())
    }
}

/// One step of a preprocessing chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Filter {
    Grayscale,
    Negate,
    Threshold { threshold: Threshold },
    Median { kernel_size: usize },
    Gaussian { sigma: f64 },
    ContrastBrightness { alpha: f64, beta: f64 },
    ReorderChannels,
    Resize { width: usize, height: usize },
}

impl Filter {
    pub fn apply(&self, img: &Image) -> Result<Image> {
        match *self {
            Filter::Grayscale => Ok(to_grayscale(img)),
            Filter::Negate => Ok(negate(img)),
            Filter::Threshold { threshold: t } => threshold(img, t),
            Filter::Median { kernel_size } => median_filter(img, kernel_size),
            Filter::Gaussian { sigma } => gaussian_blur(img, sigma),
            Filter::ContrastBrightness { alpha, beta } => {
                adjust_contrast_brightness(img, alpha, beta)
            }
            Filter::ReorderChannels => reorder_channels(img),
            Filter::Resize { width, height } => resize_bilinear(img, width, height),
        }
    }

    /// Channel count of the output for a given input channel count, or an
    /// error when the filter cannot accept that input.
    pub fn output_channels(&self, input_channels: usize) -> Result<usize> {
        match self {
            Filter::Grayscale => Ok(1),
            Filter::Threshold { .. } if input_channels != 1 => Err(ImageError::ChannelMismatch {
                expected: 1,
                found: input_channels,
            }),
            Filter::ReorderChannels if input_channels != 3 => Err(ImageError::ChannelMismatch {
                expected: 3,
                found: input_channels,
            }),
            Filter::Median { kernel_size } if kernel_size % 2 == 0 => {
                Err(ImageError::EvenKernel(*kernel_size))
            }
            Filter::Gaussian { sigma } if !(sigma.is_finite() && *sigma > 0.0) => {
                Err(ImageError::InvalidSigma(*sigma))
            }
            Filter::ContrastBrightness { alpha, .. } if !(*alpha > 0.0) => Err(
                ImageError::InvalidParameter(format!("alpha must be positive, got {alpha}")),
            ),
            Filter::Resize { width, height } if *width == 0 || *height == 0 => Err(
                ImageError::InvalidParameter(format!("resize target {width}x{height}")),
            ),
            _ => Ok(input_channels),
        }
    }
}

/// BT.601 luma. Single-channel input is returned unchanged.
pub fn to_grayscale(img: &Image) -> Image {
    if img.channels() == 1 {
        return img.clone();
    }
    let pixels = img
        .pixels()
        .chunks_exact(3)
        .map(|p| to_sample(0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64))
        .collect();
    Image::new(img.width(), img.height(), 1, pixels).expect("same geometry")
}

pub fn negate(img: &Image) -> Image {
    let mut out = img.clone();
    out.pixels_mut().iter_mut().for_each(|s| *s = 255 - *s);
    out
}

/// Binarize: samples strictly above the cut become 255, others 0.
pub fn threshold(img: &Image, t: Threshold) -> Result<Image> {
    if img.channels() != 1 {
        return Err(ImageError::ChannelMismatch {
            expected: 1,
            found: img.channels(),
        });
    }
    let cut = match t {
        Threshold::Value(v) => v,
        Threshold::Otsu => otsu_threshold(img)?,
    };
    let mut out = img.clone();
    out.pixels_mut()
        .iter_mut()
        .for_each(|s| *s = if *s > cut { 255 } else { 0 });
    Ok(out)
}

/// Cut `t` maximizing between-class variance where class 0 is `s <= t`.
/// Ties resolve to the lowest `t`.
pub fn otsu_threshold(img: &Image) -> Result<u8> {
    if img.channels() != 1 {
        return Err(ImageError::ChannelMismatch {
            expected: 1,
            found: img.channels(),
        });
    }
    let mut hist = [0u64; 256];
    for &s in img.pixels() {
        hist[s as usize] += 1;
    }
    let total = img.pixels().len() as f64;
    let sum_all: f64 = hist
        .iter()
        .enumerate()
        .map(|(v, &n)| v as f64 * n as f64)
        .sum();

    let mut best_t = 0u8;
    let mut best_var = -1.0f64;
    let mut n0 = 0.0f64;
    let mut sum0 = 0.0f64;
    for t in 0..256usize {
        n0 += hist[t] as f64;
        sum0 += t as f64 * hist[t] as f64;
        let n1 = total - n0;
        let var = if n0 == 0.0 || n1 == 0.0 {
            0.0
        } else {
            let mu0 = sum0 / n0;
            let mu1 = (sum_all - sum0) / n1;
            (n0 / total) * (n1 / total) * (mu0 - mu1) * (mu0 - mu1)
        };
        if var > best_var {
            best_var = var;
            best_t = t as u8;
        }
    }
    Ok(best_t)
}

/// Per-channel median over a `k`x`k` replicate-bordered window.
pub fn median_filter(img: &Image, kernel_size: usize) -> Result<Image> {
    if kernel_size % 2 == 0 {
        return Err(ImageError::EvenKernel(kernel_size));
    }
    let r = (kernel_size / 2) as isize;
    let mid = kernel_size * kernel_size / 2;
    let mut window = Vec::with_capacity(kernel_size * kernel_size);
    let mut out = img.clone();
    for y in 0..img.height() {
        for x in 0..img.width() {
            for c in 0..img.channels() {
                window.clear();
                for dy in -r..=r {
                    for dx in -r..=r {
                        window.push(img.get_clamped(x as isize + dx, y as isize + dy, c));
                    }
                }
                let (_, m, _) = window.select_nth_unstable(mid);
                out.set(x, y, c, *m);
            }
        }
    }
    Ok(out)
}

/// Normalized 1-D kernel of radius `ceil(3 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Result<Vec<f64>> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(ImageError::InvalidSigma(sigma));
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|w| *w /= sum);
    Ok(k)
}

/// Separable Gaussian blur with replicated borders.
pub fn gaussian_blur(img: &Image, sigma: f64) -> Result<Image> {
    let kernel = gaussian_kernel(sigma)?;
    let r = (kernel.len() / 2) as isize;
    let (w, h, ch) = (img.width(), img.height(), img.channels());
    let mut horizontal = vec![0.0f64; w * h * ch];
    for y in 0..h {
        for x in 0..w {
            for c in 0..ch {
                let mut acc = 0.0;
                for (i, kw) in kernel.iter().enumerate() {
                    acc += kw * img.get_clamped(x as isize + i as isize - r, y as isize, c) as f64;
                }
                horizontal[(y * w + x) * ch + c] = acc;
            }
        }
    }
    let mut out = img.clone();
    for y in 0..h {
        for x in 0..w {
            for c in 0..ch {
                let mut acc = 0.0;
                for (i, kw) in kernel.iter().enumerate() {
                    let yy = (y as isize + i as isize - r).clamp(0, h as isize - 1) as usize;
                    acc += kw * horizontal[(yy * w + x) * ch + c];
                }
                out.set(x, y, c, to_sample(acc));
            }
        }
    }
    Ok(out)
}

/// `s -> clamp(round(alpha (s - 128) + 128 + beta))`.
pub fn adjust_contrast_brightness(img: &Image, alpha: f64, beta: f64) -> Result<Image> {
    if !(alpha > 0.0 && alpha.is_finite()) || !beta.is_finite() {
        return Err(ImageError::InvalidParameter(format!(
            "alpha {alpha}, beta {beta}"
        )));
    }
    let mut out = img.clone();
    out.pixels_mut()
        .iter_mut()
        .for_each(|s| *s = to_sample(alpha * (*s as f64 - 128.0) + 128.0 + beta));
    Ok(out)
}

/// RGB <-> BGR.
pub fn reorder_channels(img: &Image) -> Result<Image> {
    if img.channels() != 3 {
        return Err(ImageError::ChannelMismatch {
            expected: 3,
            found: img.channels(),
        });
    }
    let mut out = img.clone();
    out.pixels_mut().chunks_exact_mut(3).for_each(|p| p.swap(0, 2));
    Ok(out)
}
