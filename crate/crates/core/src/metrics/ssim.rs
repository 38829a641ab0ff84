//! Structural similarity with a circular-symmetric Gaussian window.
//!
//! Local statistics are Gaussian-weighted means, variances and covariance over
//! every window position lying fully inside the image (no padding). The score
//! is the mean of the local values.

use serde::{Deserialize, Serialize};

use super::{check_same_dims, invalid_param, MeanImage, MetricError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SsimParams {
    pub window_size: usize,
    pub gaussian_sigma: f64,
    /// Luminance exponent.
    pub alpha: f64,
    /// Contrast exponent.
    pub beta: f64,
    /// Structure exponent.
    pub gamma: f64,
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        SsimParams {
            window_size: 11,
            gaussian_sigma: 1.5,
            alpha: 1.0,
            beta: 1.0,
            gamma: 1.0,
            k1: 0.01,
            k2: 0.03,
            dynamic_range: 255.0,
        }
    }
}

impl SsimParams {
    pub fn validate(&self) -> Result<(), MetricError> {
        if self.window_size < 3 || self.window_size.is_multiple_of(2) {
            return Err(invalid_param(
                "window_size",
                format!("{} must be odd and at least 3", self.window_size),
            ));
        }
        let positive = |name: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid_param(name, format!("{v} must be positive")))
            }
        };
        positive("gaussian_sigma", self.gaussian_sigma)?;
        positive("k1", self.k1)?;
        positive("k2", self.k2)?;
        positive("dynamic_range", self.dynamic_range)?;
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid_param(name, format!("{v} must be non-negative")));
            }
        }
        Ok(())
    }

    fn check_fits(&self, width: usize, height: usize) -> Result<(), MetricError> {
        if self.window_size > width.min(height) {
            return Err(MetricError::ImageTooSmall(format!(
                "{}x{} window does not fit a {width}x{height} image",
                self.window_size, self.window_size
            )));
        }
        Ok(())
    }

    pub fn c1(&self) -> f64 {
        (self.k1 * self.dynamic_range).powi(2)
    }

    pub fn c2(&self) -> f64 {
        (self.k2 * self.dynamic_range).powi(2)
    }

    pub fn c3(&self) -> f64 {
        self.c2() / 2.0
    }

    fn unit_exponents(&self) -> bool {
        self.alpha == 1.0 && self.beta == 1.0 && self.gamma == 1.0
    }
}

/// Normalized 1-D Gaussian taps; the 2-D window is their outer product.
pub fn gaussian_window(size: usize, sigma: f64) -> Vec<f64> {
    let half = (size / 2) as f64;
    let mut taps: Vec<f64> = (0..size)
        .map(|i| {
            let d = i as f64 - half;
            (-d * d / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let total: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= total);
    taps
}

/// Separable weighted sum over every fully-contained window.
fn filter_valid(src: &[f64], width: usize, height: usize, taps: &[f64]) -> Vec<f64> {
    let ws = taps.len();
    let ow = width - ws + 1;
    let oh = height - ws + 1;
    let mut rows = vec![0.0; height * ow];
    for r in 0..height {
        let line = &src[r * width..(r + 1) * width];
        for c in 0..ow {
            rows[r * ow + c] = taps.iter().zip(&line[c..c + ws]).map(|(t, v)| t * v).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for r in 0..oh {
        for c in 0..ow {
            let mut acc = 0.0;
            for (k, t) in taps.iter().enumerate() {
                acc += t * rows[(r + k) * ow + c];
            }
            out[r * ow + c] = acc;
        }
    }
    out
}

/// Per-image local statistics, reusable across every pairing of the image.
#[derive(Debug, Clone)]
pub struct SsimPrepared {
    params: SsimParams,
    width: usize,
    height: usize,
    pixels: Vec<f64>,
    taps: Vec<f64>,
    mean: Vec<f64>,
    mean_sq: Vec<f64>,
}

impl SsimPrepared {
    pub fn new(img: &MeanImage, params: &SsimParams) -> Result<Self, MetricError> {
        params.validate()?;
        let (w, h) = img.dims();
        params.check_fits(w, h)?;
        let taps = gaussian_window(params.window_size, params.gaussian_sigma);
        let squares: Vec<f64> = img.pixels().iter().map(|v| v * v).collect();
        Ok(SsimPrepared {
            params: *params,
            width: w,
            height: h,
            mean: filter_valid(img.pixels(), w, h, &taps),
            mean_sq: filter_valid(&squares, w, h, &taps),
            pixels: img.pixels().to_vec(),
            taps,
        })
    }
}

fn signed_pow(v: f64, e: f64) -> f64 {
    if e == 1.0 {
        v
    } else if v >= 0.0 {
        v.powf(e)
    } else {
        -(-v).powf(e)
    }
}

/// SSIM between two prepared images.
pub fn ssim_prepared(a: &SsimPrepared, b: &SsimPrepared) -> Result<f64, MetricError> {
    if (a.width, a.height) != (b.width, b.height) {
        return Err(MetricError::DimensionMismatch(
            a.width, a.height, b.width, b.height,
        ));
    }
    if a.params != b.params {
        return Err(invalid_param(
            "params",
            "images were prepared with different parameters",
        ));
    }
    let p = &a.params;
    let products: Vec<f64> = a.pixels.iter().zip(&b.pixels).map(|(x, y)| x * y).collect();
    let cross = filter_valid(&products, a.width, a.height, &a.taps);
    let (c1, c2, c3) = (p.c1(), p.c2(), p.c3());
    let unit = p.unit_exponents();

    let mut total = 0.0;
    for (i, &xy) in cross.iter().enumerate() {
        let (mx, my) = (a.mean[i], b.mean[i]);
        let vx = a.mean_sq[i] - mx * mx;
        let vy = b.mean_sq[i] - my * my;
        let cov = xy - mx * my;
        let local = if unit {
            ((2.0 * mx * my + c1) * (2.0 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2))
        } else {
            let (sx, sy) = (vx.max(0.0).sqrt(), vy.max(0.0).sqrt());
            let l = (2.0 * mx * my + c1) / (mx * mx + my * my + c1);
            let c = (2.0 * sx * sy + c2) / (vx.max(0.0) + vy.max(0.0) + c2);
            let s = (cov + c3) / (sx * sy + c3);
            l.powf(p.alpha) * c.powf(p.beta) * signed_pow(s, p.gamma)
        };
        total += local;
    }
    Ok(total / cross.len() as f64)
}

/// Mean SSIM over all fully-contained window positions.
pub fn ssim(a: &MeanImage, b: &MeanImage, params: &SsimParams) -> Result<f64, MetricError> {
    check_same_dims(a, b)?;
    let pa = SsimPrepared::new(a, params)?;
    let pb = SsimPrepared::new(b, params)?;
    ssim_prepared(&pa, &pb)
}
