//! Shared fixtures and brute-force reference implementations for the
//! integration tests. Nothing here calls into the code paths it is used to
//! check, except `cwssim_oracle`, which takes its coefficients from the
//! separately verified pyramid.

#![allow(dead_code, clippy::needless_range_loop)]

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uti_misalign::ingest::band_limited_texture;
use uti_misalign::metrics::{complex_wavelet_decompose, CwSsimParams, MeanImage, SsimParams};

pub fn random_image(width: usize, height: usize, seed: u64) -> MeanImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pixels = (0..width * height).map(|_| rng.random_range(0.0..=255.0)).collect();
    MeanImage::new(width, height, pixels).unwrap()
}

pub fn textured_image(width: usize, height: usize, seed: u64) -> MeanImage {
    MeanImage::from_u8(width, height, &band_limited_texture(width, height, seed)).unwrap()
}

pub fn shifted(img: &MeanImage, dy: i64, dx: i64) -> MeanImage {
    let (w, h) = img.dims();
    let mut out = vec![0.0; w * h];
    for r in 0..h {
        for c in 0..w {
            let sr = (r as i64 - dy).rem_euclid(h as i64) as usize;
            let sc = (c as i64 - dx).rem_euclid(w as i64) as usize;
            out[r * w + c] = img.get(sr, sc);
        }
    }
    MeanImage::new(w, h, out).unwrap()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

pub fn mse_oracle(a: &MeanImage, b: &MeanImage) -> f64 {
    let (w, h) = a.dims();
    let mut sum = 0.0;
    for r in 0..h {
        for c in 0..w {
            let d = a.get(r, c) - b.get(r, c);
            sum += d * d;
        }
    }
    sum / (w * h) as f64
}

/// Direct windowed SSIM: full 2-D Gaussian weights, two-pass moments and the
/// explicit luminance, contrast and structure factors.
pub fn ssim_oracle(a: &MeanImage, b: &MeanImage, p: &SsimParams) -> f64 {
    let n = p.window_size;
    let half = (n / 2) as f64;
    let mut weights = vec![vec![0.0; n]; n];
    let mut total = 0.0;
    for (i, row) in weights.iter_mut().enumerate() {
        for (j, wt) in row.iter_mut().enumerate() {
            let (di, dj) = (i as f64 - half, j as f64 - half);
            *wt = (-(di * di + dj * dj) / (2.0 * p.gaussian_sigma * p.gaussian_sigma)).exp();
            total += *wt;
        }
    }
    for row in weights.iter_mut() {
        for wt in row.iter_mut() {
            *wt /= total;
        }
    }
    let c1 = (p.k1 * p.dynamic_range).powi(2);
    let c2 = (p.k2 * p.dynamic_range).powi(2);
    let c3 = c2 / 2.0;
    let (w, h) = a.dims();
    let mut acc = 0.0;
    let mut count = 0;
    for r0 in 0..=h - n {
        for c0 in 0..=w - n {
            let (mut mx, mut my) = (0.0, 0.0);
            for i in 0..n {
                for j in 0..n {
                    mx += weights[i][j] * a.get(r0 + i, c0 + j);
                    my += weights[i][j] * b.get(r0 + i, c0 + j);
                }
            }
            let (mut vx, mut vy, mut cov) = (0.0, 0.0, 0.0);
            for i in 0..n {
                for j in 0..n {
                    let dx = a.get(r0 + i, c0 + j) - mx;
                    let dy = b.get(r0 + i, c0 + j) - my;
                    vx += weights[i][j] * dx * dx;
                    vy += weights[i][j] * dy * dy;
                    cov += weights[i][j] * dx * dy;
                }
            }
            let (sx, sy) = (vx.sqrt(), vy.sqrt());
            let l = (2.0 * mx * my + c1) / (mx * mx + my * my + c1);
            let c = (2.0 * sx * sy + c2) / (vx + vy + c2);
            let s = (cov + c3) / (sx * sy + c3);
            acc += l.powf(p.alpha) * c.powf(p.beta) * s.powf(p.gamma);
            count += 1;
        }
    }
    acc / count as f64
}

/// Window loop over comparison-level coefficients, one window at a time.
pub fn cwssim_oracle(a: &MeanImage, b: &MeanImage, p: &CwSsimParams) -> f64 {
    let ba = complex_wavelet_decompose(a, p).unwrap();
    let bb = complex_wavelet_decompose(b, p).unwrap();
    let n = p.local_window;
    let mut acc = 0.0;
    let mut count = 0;
    for (x, y) in ba.iter().zip(&bb).filter(|(x, _)| x.scale == p.comparison_level) {
        let (w, h) = (x.width, x.height);
        for r0 in 0..=h - n {
            for c0 in 0..=w - n {
                let mut cross = Complex64::new(0.0, 0.0);
                let (mut ex, mut ey) = (0.0, 0.0);
                for i in 0..n {
                    for j in 0..n {
                        let k = (r0 + i) * w + c0 + j;
                        cross += x.coeffs[k] * y.coeffs[k].conj();
                        ex += x.coeffs[k].norm_sqr();
                        ey += y.coeffs[k].norm_sqr();
                    }
                }
                acc += (2.0 * cross.norm() + p.k_stabilizer) / (ex + ey + p.k_stabilizer);
                count += 1;
            }
        }
    }
    acc / count as f64
}

fn signed_freqs(d: usize) -> Vec<i64> {
    // centred layout: [-floor(d/2), d - 1 - floor(d/2)]
    let lo = -((d / 2) as i64);
    (0..d as i64).map(|k| lo + k).collect()
}

fn high_sq(log_r: f64, edge: f64) -> f64 {
    let t = (log_r - edge).clamp(-1.0, 0.0);
    (PI / 2.0 * t).cos().powi(2)
}

/// Energy of every subband of a unit impulse, computed in the frequency
/// domain by Parseval: the impulse spectrum has unit magnitude, so band
/// energy is the squared filter response summed over the level's frequency
/// grid divided by the grid size.
pub fn impulse_energy_oracle(
    width: usize,
    height: usize,
    n_scales: usize,
    n_orientations: usize,
) -> Vec<f64> {
    let order = n_orientations - 1;
    let fact = |n: usize| (1..=n).map(|k| k as f64).product::<f64>();
    let norm = 4f64.powi(order as i32) * fact(order).powi(2)
        / (n_orientations as f64 * fact(2 * order));
    let mut energies = Vec::new();
    let (mut lw, mut lh) = (width, height);
    for scale in 1..=n_scales {
        let ys = signed_freqs(lh);
        let xs = signed_freqs(lw);
        for b in 0..n_orientations {
            let centre = PI * b as f64 / n_orientations as f64;
            let mut sum = 0.0;
            for &fy in &ys {
                for &fx in &xs {
                    let x = fx as f64 / (width as f64 / 2.0);
                    let y = fy as f64 / (height as f64 / 2.0);
                    let log_r = (x * x + y * y).sqrt().log2();
                    let mut gain = 1.0 - high_sq(log_r, 0.0);
                    for j in 1..scale {
                        gain *= 1.0 - high_sq(log_r, -(j as f64));
                    }
                    gain *= high_sq(log_r, -(scale as f64));
                    let mut delta = y.atan2(x) - centre;
                    while delta >= PI {
                        delta -= 2.0 * PI;
                    }
                    while delta < -PI {
                        delta += 2.0 * PI;
                    }
                    if delta.abs() < PI / 2.0 {
                        gain *= 4.0 * norm * delta.cos().powi(2 * order as i32);
                    } else {
                        gain = 0.0;
                    }
                    sum += gain;
                }
            }
            energies.push(sum / (lw * lh) as f64);
        }
        lw = lw.div_ceil(2);
        lh = lh.div_ceil(2);
    }
    energies
}
