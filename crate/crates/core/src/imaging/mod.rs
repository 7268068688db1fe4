//! 8-bit rasters, PNM I/O and the preprocessing filter suite.
//!
//! Every filter is a pure function from an [`Image`] to a new [`Image`].
//! Neighborhood filters replicate border pixels. Filter math runs in
//! floating point and is written back with round-half-up.

mod filters;
mod geometry;
mod pnm;

pub use filters::{
    adjust_contrast_brightness, gaussian_blur, gaussian_kernel, median_filter, negate,
    otsu_threshold, reorder_channels, threshold, to_grayscale, Filter, FilterParams, Threshold,
};
pub use geometry::{
    crop_replicate, object_scale_normalize, resize_bilinear, scale_window, BoundingBox,
    DEFAULT_TARGET_FRACTION, STANDARD_HEIGHT, STANDARD_WIDTH,
};
pub use pnm::{pnm_read, pnm_write, read_pnm_file, write_pnm_file};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ImageError {
    #[error("malformed PNM header: {0}")]
    MalformedHeader(String),
    #[error("unsupported maxval {0}, only 255 is accepted")]
    UnsupportedMaxval(u32),
    #[error("truncated payload: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("invalid dimensions {width}x{height}x{channels}")]
    InvalidDimensions {
        width: usize,
        height: usize,
        channels: usize,
    },
    #[error("pixel buffer holds {found} samples, expected {expected}")]
    BufferSize { expected: usize, found: usize },
    #[error("operation needs {expected}-channel input, got {found}")]
    ChannelMismatch { expected: usize, found: usize },
    #[error("kernel size must be odd and at least 1, got {0}")]
    EvenKernel(usize),
    #[error("sigma must be finite and positive, got {0}")]
    InvalidSigma(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("degenerate bounding box {0:?}")]
    DegenerateBox(BoundingBox),
    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, ImageError>;

/// Row-major, channel-interleaved 8-bit raster with 1 or 3 channels.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    pixels: Vec<u8>,
}

impl std::fmt::Debug for Image {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Image")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("channels", &self.channels)
            .finish_non_exhaustive()
    }
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize, pixels: Vec<u8>) -> Result<Self> {
        check_dims(width, height, channels)?;
        let expected = width * height * channels;
        if pixels.len() != expected {
            return Err(ImageError::BufferSize {
                expected,
                found: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            channels,
            pixels,
        })
    }

    /// An image with every sample set to `value`.
    pub fn filled(width: usize, height: usize, channels: usize, value: u8) -> Result<Self> {
        check_dims(width, height, channels)?;
        Ok(Self {
            width,
            height,
            channels,
            pixels: vec![value; width * height * channels],
        })
    }

    pub fn from_fn<F>(width: usize, height: usize, channels: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, usize, usize) -> u8,
    {
        check_dims(width, height, channels)?;
        let mut pixels = Vec::with_capacity(width * height * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    pixels.push(f(x, y, c));
                }
            }
        }
        Ok(Self {
            width,
            height,
            channels,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> u8 {
        self.pixels[(y * self.width + x) * self.channels + c]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, value: u8) {
        self.pixels[(y * self.width + x) * self.channels + c] = value;
    }

    /// Sample at signed coordinates with replicated borders.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize, c: usize) -> u8 {
        let xc = x.clamp(0, self.width as isize - 1) as usize;
        let yc = y.clamp(0, self.height as isize - 1) as usize;
        self.get(xc, yc, c)
    }

    /// Inclusive (min, max) over all samples.
    pub fn sample_range(&self) -> (u8, u8) {
        let min = self.pixels.iter().copied().min().unwrap_or(0);
        let max = self.pixels.iter().copied().max().unwrap_or(0);
        (min, max)
    }

    pub fn same_size(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Pixels as floats in `[0, 1]`, row-major and channel-interleaved.
    pub fn to_unit_f32(&self) -> Vec<f32> {
        self.pixels.iter().map(|&p| p as f32 / 255.0).collect()
    }
}

fn check_dims(width: usize, height: usize, channels: usize) -> Result<()> {
    if width == 0 || height == 0 || !(channels == 1 || channels == 3) {
        return Err(ImageError::InvalidDimensions {
            width,
            height,
            channels,
        });
    }
    Ok(())
}

/// Round-half-up and clamp to the 8-bit range.
#[inline]
pub(crate) fn to_sample(v: f64) -> u8 {
    let r = (v + 0.5).floor();
    r.clamp(0.0, 255.0) as u8
}
