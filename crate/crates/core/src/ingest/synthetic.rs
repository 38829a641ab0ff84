//! Synthetic sessions with known misalignment.
//!
//! A single band-limited texture stands in for the probe's view of the
//! tongue. Every utterance repeats it with per-frame Gaussian noise; at each
//! shift boundary the texture is circularly shifted by a further offset, so the
//! true block structure of the session is known exactly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Frame, IngestError, Session, Utterance};

/// Standard deviation, in pixels, of the circular blur applied to the noise
/// the texture is made from.
pub const TEXTURE_BLUR_SIGMA: f64 = 2.0;
const TEXTURE_LOW: f64 = 40.0;
const TEXTURE_HIGH: f64 = 215.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShiftBoundary {
    /// First utterance recorded at the new probe position.
    pub index: usize,
    /// Vertical shift in rows (positive moves content down).
    pub dy: i64,
    /// Horizontal shift in columns (positive moves content right).
    pub dx: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_utterances: usize,
    pub frames_per_utterance: usize,
    pub width: usize,
    pub height: usize,
    #[serde(default)]
    pub shift_boundaries: Vec<ShiftBoundary>,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub texture_seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<(), IngestError> {
        let invalid = |field: &str, reason: String| IngestError::InvalidSpec {
            field: field.to_string(),
            reason,
        };
        if self.n_utterances == 0 {
            return Err(invalid("n_utterances", "must be at least 1".into()));
        }
        if self.frames_per_utterance == 0 {
            return Err(invalid("frames_per_utterance", "must be at least 1".into()));
        }
        if self.width == 0 {
            return Err(invalid("width", "must be at least 1".into()));
        }
        if self.height == 0 {
            return Err(invalid("height", "must be at least 1".into()));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(invalid(
                "noise_sigma",
                format!("{} is not a finite non-negative value", self.noise_sigma),
            ));
        }
        let limit = self.width.min(self.height) as f64 / 2.0;
        for (k, b) in self.shift_boundaries.iter().enumerate() {
            if b.index < 1 || b.index >= self.n_utterances {
                return Err(invalid(
                    &format!("shift_boundaries[{k}].index"),
                    format!(
                        "{} out of range [1, {}]",
                        b.index,
                        self.n_utterances as i64 - 1
                    ),
                ));
            }
            for (name, v) in [("dy", b.dy), ("dx", b.dx)] {
                if (v.unsigned_abs() as f64) >= limit {
                    return Err(invalid(
                        &format!("shift_boundaries[{k}].{name}"),
                        format!("|{v}| must be below min(width, height)/2 = {limit}"),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Cumulative `(dy, dx)` offset in effect for utterance `u`.
    pub fn offset_at(&self, u: usize) -> (i64, i64) {
        self.shift_boundaries
            .iter()
            .filter(|b| b.index <= u)
            .fold((0, 0), |(y, x), b| (y + b.dy, x + b.dx))
    }
}

fn circular_blur_1d(src: &[f64], dst: &mut [f64], len: usize, stride: usize, count: usize, line_stride: usize, kernel: &[f64]) {
    let radius = (kernel.len() / 2) as i64;
    for line in 0..count {
        let base = line * line_stride;
        for i in 0..len {
            let mut acc = 0.0;
            for (t, &k) in kernel.iter().enumerate() {
                let j = (i as i64 + t as i64 - radius).rem_euclid(len as i64) as usize;
                acc += k * src[base + j * stride];
            }
            dst[base + i * stride] = acc;
        }
    }
}

/// Row-major `width` x `height` texture of low-pass filtered uniform noise,
/// rescaled to mid-gray levels and quantized. Deterministic in `seed`.
pub fn band_limited_texture(width: usize, height: usize, seed: u64) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise: Vec<f64> = (0..width * height).map(|_| rng.random::<f64>()).collect();

    let radius = (3.0 * TEXTURE_BLUR_SIGMA).ceil() as i64;
    let mut kernel: Vec<f64> = (-radius..=radius)
        .map(|t| (-(t * t) as f64 / (2.0 * TEXTURE_BLUR_SIGMA * TEXTURE_BLUR_SIGMA)).exp())
        .collect();
    let total: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|k| *k /= total);

    let mut rows = vec![0.0; noise.len()];
    circular_blur_1d(&noise, &mut rows, width, 1, height, width, &kernel);
    let mut blurred = vec![0.0; noise.len()];
    circular_blur_1d(&rows, &mut blurred, height, width, width, 1, &kernel);

    let lo = blurred.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = blurred.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    blurred
        .iter()
        .map(|&v| {
            let t = if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };
            (TEXTURE_LOW + t * (TEXTURE_HIGH - TEXTURE_LOW)).round() as u8
        })
        .collect()
}

fn circular_shift(img: &[u8], width: usize, height: usize, dy: i64, dx: i64) -> Vec<u8> {
    let mut out = vec![0u8; img.len()];
    for r in 0..height {
        let sr = (r as i64 - dy).rem_euclid(height as i64) as usize;
        for c in 0..width {
            let sc = (c as i64 - dx).rem_euclid(width as i64) as usize;
            out[r * width + c] = img[sr * width + sc];
        }
    }
    out
}

pub fn generate_synthetic_session(spec: &SyntheticSpec) -> Result<Session, IngestError> {
    spec.validate()?;
    let (w, h) = (spec.width, spec.height);
    let base = band_limited_texture(w, h, spec.texture_seed);

    let mut noise_rng = ChaCha8Rng::seed_from_u64(spec.texture_seed);
    noise_rng.set_stream(1);
    let normal = (spec.noise_sigma > 0.0)
        .then(|| Normal::new(0.0, spec.noise_sigma).expect("validated sigma"));

    let digits = spec.n_utterances.to_string().len().max(3);
    let mut utterances = Vec::with_capacity(spec.n_utterances);
    let mut shifted: Option<((i64, i64), Vec<u8>)> = None;
    for u in 0..spec.n_utterances {
        let offset = spec.offset_at(u);
        if shifted.as_ref().map(|(o, _)| *o) != Some(offset) {
            shifted = Some((offset, circular_shift(&base, w, h, offset.0, offset.1)));
        }
        let clean = &shifted.as_ref().expect("set above").1;
        let frames = (0..spec.frames_per_utterance)
            .map(|_| {
                let pixels = match &normal {
                    None => clean.clone(),
                    Some(dist) => clean
                        .iter()
                        .map(|&p| (p as f64 + dist.sample(&mut noise_rng)).round().clamp(0.0, 255.0) as u8)
                        .collect(),
                };
                Frame::new(w, h, pixels)
            })
            .collect::<Result<Vec<_>, _>>()?;
        utterances.push(Utterance::new(
            format!("utt{u:0digits$}"),
            u as f64,
            frames,
            None,
        )?);
    }
    Session::new(
        "synthetic",
        format!("seed{}", spec.texture_seed),
        utterances,
    )
}
