//! Complex steerable pyramid built in the frequency domain.
//!
//! Radial filters are raised-cosine transitions in log2 radius, one octave
//! wide; angular filters are `cos^(K-1)` lobes restricted to a half plane so
//! each oriented band is analytic (complex-valued in space). The image is
//! first low-passed below normalized radius 1; level `k` then keeps the
//! octave between radii `2^-(k+1)` and `2^-(k-1)` and is evaluated on a grid
//! halved `k-1` times. Radii are measured in frequencies normalized by half
//! the full image size along each axis, as in the common steerable-pyramid
//! toolboxes.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{invalid_param, CwSsimParams, MeanImage, MetricError};

#[derive(Debug, Clone, PartialEq)]
pub struct SubbandCoefficients {
    /// 1-based pyramid level; level 1 is full resolution.
    pub scale: usize,
    /// 0-based orientation; band `b` is centred on angle `pi * b / n_orientations`.
    pub orientation: usize,
    pub width: usize,
    pub height: usize,
    /// Row-major complex coefficients.
    pub coeffs: Vec<Complex64>,
}

/// Grid size after one pyramid halving.
pub(crate) fn halve(d: usize) -> usize {
    d.div_ceil(2)
}

/// `(width, height)` of level `scale` (1-based) for an image of `width` x `height`.
pub fn level_dims(width: usize, height: usize, scale: usize) -> (usize, usize) {
    (1..scale).fold((width, height), |(w, h), _| (halve(w), halve(h)))
}

/// Signed integer frequency stored at unshifted DFT index `k` of a length-`d` axis.
fn signed_freq(k: usize, d: usize) -> i64 {
    if k <= d - 1 - d / 2 {
        k as i64
    } else {
        k as i64 - d as i64
    }
}

/// High-pass half of the raised-cosine pair whose transition spans
/// log2 radius `[edge - 1, edge]`.
pub(crate) fn radial_high(log_r: f64, edge: f64) -> f64 {
    if log_r >= edge {
        1.0
    } else if log_r <= edge - 1.0 {
        0.0
    } else {
        (FRAC_PI_2 * (log_r - edge)).cos().abs()
    }
}

pub(crate) fn radial_low(log_r: f64, edge: f64) -> f64 {
    if log_r >= edge {
        0.0
    } else if log_r <= edge - 1.0 {
        1.0
    } else {
        (FRAC_PI_2 * (log_r - edge)).sin().abs()
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Half-plane angular lobe for band `band` of `n_bands`.
pub(crate) fn angular(theta: f64, band: usize, n_bands: usize) -> f64 {
    let order = n_bands - 1;
    let norm = 2f64.powi(2 * order as i32) * factorial(order).powi(2)
        / (n_bands as f64 * factorial(2 * order));
    let centre = PI * band as f64 / n_bands as f64;
    let delta = (theta - centre + PI).rem_euclid(2.0 * PI) - PI;
    if delta.abs() < FRAC_PI_2 {
        2.0 * norm.sqrt() * delta.cos().powi(order as i32)
    } else {
        0.0
    }
}

struct Fft2 {
    width: usize,
    height: usize,
    rows: Arc<dyn Fft<f64>>,
    cols: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    fn new(planner: &mut FftPlanner<f64>, width: usize, height: usize, inverse: bool) -> Self {
        let (rows, cols) = if inverse {
            (planner.plan_fft_inverse(width), planner.plan_fft_inverse(height))
        } else {
            (planner.plan_fft_forward(width), planner.plan_fft_forward(height))
        };
        Fft2 {
            width,
            height,
            rows,
            cols,
        }
    }

    fn process(&self, data: &mut [Complex64]) {
        for row in data.chunks_exact_mut(self.width) {
            self.rows.process(row);
        }
        let mut column = vec![Complex64::new(0.0, 0.0); self.height];
        for c in 0..self.width {
            for r in 0..self.height {
                column[r] = data[r * self.width + c];
            }
            self.cols.process(&mut column);
            for r in 0..self.height {
                data[r * self.width + c] = column[r];
            }
        }
    }
}

/// Frequency grid of one level: log2 radius and angle per DFT index, in
/// coordinates normalized by the full image size.
struct Grid {
    width: usize,
    height: usize,
    log_r: Vec<f64>,
    theta: Vec<f64>,
}

impl Grid {
    fn new(width: usize, height: usize, full_width: usize, full_height: usize) -> Self {
        let mut log_r = Vec::with_capacity(width * height);
        let mut theta = Vec::with_capacity(width * height);
        for r in 0..height {
            let y = signed_freq(r, height) as f64 / (full_height as f64 / 2.0);
            for c in 0..width {
                let x = signed_freq(c, width) as f64 / (full_width as f64 / 2.0);
                log_r.push(x.hypot(y).log2());
                theta.push(y.atan2(x));
            }
        }
        Grid {
            width,
            height,
            log_r,
            theta,
        }
    }
}

fn check_decomposable(
    width: usize,
    height: usize,
    n_orientations: usize,
    levels: usize,
) -> Result<(), MetricError> {
    if levels == 0 {
        return Err(invalid_param("n_scales", "must be at least 1"));
    }
    if n_orientations == 0 {
        return Err(invalid_param("n_orientations", "must be at least 1"));
    }
    let (w, h) = level_dims(width, height, levels);
    if w.min(h) < 2 {
        return Err(MetricError::ImageTooSmall(format!(
            "{width}x{height} image shrinks to {w}x{h} at level {levels}; at least 2x2 is required"
        )));
    }
    Ok(())
}

/// Oriented subbands for levels `1..=levels`, ordered by level then orientation.
pub fn decompose_levels(
    img: &MeanImage,
    n_orientations: usize,
    levels: usize,
) -> Result<Vec<SubbandCoefficients>, MetricError> {
    let (full_w, full_h) = img.dims();
    check_decomposable(full_w, full_h, n_orientations, levels)?;

    let mut planner = FftPlanner::new();
    let mut lodft: Vec<Complex64> = img
        .pixels()
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    Fft2::new(&mut planner, full_w, full_h, false).process(&mut lodft);

    let mut grid = Grid::new(full_w, full_h, full_w, full_h);
    for (v, &lr) in lodft.iter_mut().zip(&grid.log_r) {
        *v *= radial_low(lr, 0.0);
    }

    let phase = Complex64::new(0.0, -1.0).powu(n_orientations as u32 - 1);
    let mut bands = Vec::with_capacity(levels * n_orientations);
    for scale in 1..=levels {
        let edge = -(scale as f64);
        let (w, h) = (grid.width, grid.height);
        let inverse = Fft2::new(&mut planner, w, h, true);
        let norm = 1.0 / (w * h) as f64;
        let high: Vec<f64> = grid.log_r.iter().map(|&lr| radial_high(lr, edge)).collect();
        for orientation in 0..n_orientations {
            let mut band: Vec<Complex64> = lodft
                .iter()
                .zip(&high)
                .zip(&grid.theta)
                .map(|((&v, &hi), &th)| v * (hi * angular(th, orientation, n_orientations)) * phase)
                .collect();
            inverse.process(&mut band);
            band.iter_mut().for_each(|v| *v *= norm);
            bands.push(SubbandCoefficients {
                scale,
                orientation,
                width: w,
                height: h,
                coeffs: band,
            });
        }
        if scale == levels {
            break;
        }
        // low-pass below this octave, then keep only the frequencies the
        // half-size grid can represent
        let (nw, nh) = (halve(w), halve(h));
        let mut next = Vec::with_capacity(nw * nh);
        for r in 0..nh {
            let sr = signed_freq(r, nh).rem_euclid(h as i64) as usize;
            for c in 0..nw {
                let sc = signed_freq(c, nw).rem_euclid(w as i64) as usize;
                let i = sr * w + sc;
                next.push(lodft[i] * radial_low(grid.log_r[i], edge));
            }
        }
        lodft = next;
        grid = Grid::new(nw, nh, full_w, full_h);
    }
    Ok(bands)
}

/// Full decomposition: `n_scales` levels of `n_orientations` complex subbands.
pub fn complex_wavelet_decompose(
    img: &MeanImage,
    params: &CwSsimParams,
) -> Result<Vec<SubbandCoefficients>, MetricError> {
    params.validate()?;
    decompose_levels(img, params.n_orientations, params.n_scales)
}
