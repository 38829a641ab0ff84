//! Complex wavelet structural similarity.
//!
//! For every orientation band at one pyramid level, a square window slides
//! over both coefficient grids and the local index
//!
//! ```text
//!     (2 |sum w_a conj(w_b)| + K) / (sum |w_a|^2 + sum |w_b|^2 + K)
//! ```
//!
//! is taken over the coefficients in the window. The score is the plain mean
//! over all window positions and orientations. Uniform phase shifts inside a
//! window, which is what small translations produce, leave the index intact.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::pyramid::{decompose_levels, level_dims};
use super::{check_same_dims, invalid_param, MeanImage, MetricError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CwSsimParams {
    pub k_stabilizer: f64,
    pub n_scales: usize,
    pub n_orientations: usize,
    /// 1-based level whose subbands are compared.
    pub comparison_level: usize,
    pub local_window: usize,
}

impl Default for CwSsimParams {
    fn default() -> Self {
        CwSsimParams {
            k_stabilizer: 0.01,
            n_scales: 4,
            n_orientations: 6,
            comparison_level: 2,
            local_window: 7,
        }
    }
}

impl CwSsimParams {
    pub fn validate(&self) -> Result<(), MetricError> {
        if !(self.k_stabilizer.is_finite() && self.k_stabilizer > 0.0) {
            return Err(invalid_param(
                "k_stabilizer",
                format!("{} must be positive", self.k_stabilizer),
            ));
        }
        if self.n_scales == 0 {
            return Err(invalid_param("n_scales", "must be at least 1"));
        }
        if self.n_orientations == 0 {
            return Err(invalid_param("n_orientations", "must be at least 1"));
        }
        if self.comparison_level == 0 || self.comparison_level > self.n_scales {
            return Err(invalid_param(
                "comparison_level",
                format!(
                    "{} must lie in [1, {}]",
                    self.comparison_level, self.n_scales
                ),
            ));
        }
        if self.local_window.is_multiple_of(2) {
            return Err(invalid_param(
                "local_window",
                format!("{} must be odd", self.local_window),
            ));
        }
        Ok(())
    }

    fn check_fits(&self, width: usize, height: usize) -> Result<(), MetricError> {
        let (w, h) = level_dims(width, height, self.comparison_level);
        if w.min(h) < self.local_window {
            return Err(MetricError::ImageTooSmall(format!(
                "{width}x{height} image is {w}x{h} at level {}, smaller than the {}-coefficient window",
                self.comparison_level, self.local_window
            )));
        }
        Ok(())
    }
}

/// Sums over every fully-contained `win` x `win` window, rows first.
fn window_sums<T>(src: &[T], width: usize, height: usize, win: usize) -> Vec<T>
where
    T: Copy + Default + std::ops::Add<Output = T>,
{
    let ow = width - win + 1;
    let oh = height - win + 1;
    let mut rows = vec![T::default(); height * ow];
    for r in 0..height {
        let line = &src[r * width..(r + 1) * width];
        for c in 0..ow {
            rows[r * ow + c] = line[c..c + win].iter().fold(T::default(), |acc, &v| acc + v);
        }
    }
    let mut out = vec![T::default(); oh * ow];
    for r in 0..oh {
        for c in 0..ow {
            out[r * ow + c] = (0..win).fold(T::default(), |acc, k| acc + rows[(r + k) * ow + c]);
        }
    }
    out
}

#[derive(Debug, Clone)]
struct PreparedBand {
    coeffs: Vec<Complex64>,
    energy: Vec<f64>,
}

/// Comparison-level subbands of one image plus their windowed energies.
#[derive(Debug, Clone)]
pub struct CwSsimPrepared {
    params: CwSsimParams,
    image_dims: (usize, usize),
    width: usize,
    height: usize,
    bands: Vec<PreparedBand>,
}

impl CwSsimPrepared {
    pub fn new(img: &MeanImage, params: &CwSsimParams) -> Result<Self, MetricError> {
        params.validate()?;
        let (iw, ih) = img.dims();
        params.check_fits(iw, ih)?;
        let all = decompose_levels(img, params.n_orientations, params.comparison_level)?;
        let level: Vec<_> = all
            .into_iter()
            .filter(|b| b.scale == params.comparison_level)
            .collect();
        let (width, height) = (level[0].width, level[0].height);
        let bands = level
            .into_iter()
            .map(|b| {
                let power: Vec<f64> = b.coeffs.iter().map(|c| c.re * c.re + c.im * c.im).collect();
                PreparedBand {
                    energy: window_sums(&power, width, height, params.local_window),
                    coeffs: b.coeffs,
                }
            })
            .collect();
        Ok(CwSsimPrepared {
            params: *params,
            image_dims: (iw, ih),
            width,
            height,
            bands,
        })
    }
}

pub fn cw_ssim_prepared(a: &CwSsimPrepared, b: &CwSsimPrepared) -> Result<f64, MetricError> {
    if a.image_dims != b.image_dims {
        return Err(MetricError::DimensionMismatch(
            a.image_dims.0,
            a.image_dims.1,
            b.image_dims.0,
            b.image_dims.1,
        ));
    }
    if a.params != b.params {
        return Err(invalid_param(
            "params",
            "images were prepared with different parameters",
        ));
    }
    let k = a.params.k_stabilizer;
    let win = a.params.local_window;
    let mut total = 0.0;
    let mut count = 0usize;
    for (ba, bb) in a.bands.iter().zip(&b.bands) {
        // written out so that swapping operands conjugates the product exactly
        let cross: Vec<Complex64> = ba
            .coeffs
            .iter()
            .zip(&bb.coeffs)
            .map(|(x, y)| Complex64::new(x.re * y.re + x.im * y.im, x.im * y.re - x.re * y.im))
            .collect();
        let sums = window_sums(&cross, a.width, a.height, win);
        for ((s, ea), eb) in sums.iter().zip(&ba.energy).zip(&bb.energy) {
            let local = (2.0 * s.re.hypot(s.im) + k) / (ea + eb + k);
            total += local.min(1.0);
            count += 1;
        }
    }
    Ok(total / count as f64)
}

pub fn cw_ssim(a: &MeanImage, b: &MeanImage, params: &CwSsimParams) -> Result<f64, MetricError> {
    check_same_dims(a, b)?;
    let pa = CwSsimPrepared::new(a, params)?;
    let pb = CwSsimPrepared::new(b, params)?;
    cw_ssim_prepared(&pa, &pb)
}
