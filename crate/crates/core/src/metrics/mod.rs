//! Pairwise image comparison measures: MSE, Gaussian-windowed SSIM and
//! CW-SSIM over a complex steerable pyramid.
//!
//! All measures operate on real-valued [`MeanImage`]s on the 0–255 grayscale
//! scale. Each is symmetric bit-for-bit in its operands.

mod cwssim;
mod pyramid;
mod ssim;

use thiserror::Error;

pub use cwssim::{cw_ssim, cw_ssim_prepared, CwSsimParams, CwSsimPrepared};
pub use pyramid::{complex_wavelet_decompose, decompose_levels, SubbandCoefficients};
pub use ssim::{gaussian_window, ssim, ssim_prepared, SsimParams, SsimPrepared};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("invalid image: {0}")]
    InvalidImage(String),
    #[error("invalid parameter {name}: {reason}")]
    InvalidParams { name: &'static str, reason: String },
    #[error("image too small: {0}")]
    ImageTooSmall(String),
}

pub(crate) fn invalid_param(name: &'static str, reason: impl Into<String>) -> MetricError {
    MetricError::InvalidParams {
        name,
        reason: reason.into(),
    }
}

/// Temporal average of an utterance's frames, one real value per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl MeanImage {
    /// Rejects empty dims, a length mismatch, and pixels that are non-finite or
    /// outside [0, 255].
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self, MetricError> {
        if width == 0 || height == 0 {
            return Err(MetricError::InvalidImage(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(MetricError::InvalidImage(format!(
                "expected {} pixels, got {}",
                width * height,
                pixels.len()
            )));
        }
        if let Some((i, v)) = pixels
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && (0.0..=255.0).contains(*v)))
        {
            return Err(MetricError::InvalidImage(format!(
                "pixel {i} = {v} is not a finite value in [0, 255]"
            )));
        }
        Ok(MeanImage {
            width,
            height,
            pixels,
        })
    }

    pub fn from_u8(width: usize, height: usize, pixels: &[u8]) -> Result<Self, MetricError> {
        Self::new(width, height, pixels.iter().map(|&p| p as f64).collect())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }
}

pub(crate) fn check_same_dims(a: &MeanImage, b: &MeanImage) -> Result<(), MetricError> {
    if a.dims() != b.dims() {
        return Err(MetricError::DimensionMismatch(
            a.width, a.height, b.width, b.height,
        ));
    }
    Ok(())
}

/// Mean squared pixel difference. Lower means more similar.
pub fn mse(a: &MeanImage, b: &MeanImage) -> Result<f64, MetricError> {
    check_same_dims(a, b)?;
    let sum: f64 = a
        .pixels
        .iter()
        .zip(&b.pixels)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum();
    Ok(sum / a.pixels.len() as f64)
}
