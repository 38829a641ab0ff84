//! Scan conversion of scanline images into a fan.
//!
//! Image rows are beams at equally spaced angles across `angle_span`, row 0
//! on the left; columns are radial samples starting `zero_offset` samples
//! from the virtual apex, which sits at the top centre of the output. Each
//! output pixel is mapped back to (beam, sample) coordinates and interpolated.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ensure_parent, write_png, RenderError, RgbBuffer};
use crate::metrics::MeanImage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    Nearest,
    Bilinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WedgeSpec {
    /// Fan opening in radians.
    pub angle_span: f64,
    /// Samples between the apex and the first radial sample.
    pub zero_offset: f64,
    /// Side of the square output, in pixels.
    pub output_size: usize,
    pub interpolation: Interpolation,
}

impl Default for WedgeSpec {
    fn default() -> Self {
        WedgeSpec {
            angle_span: 92f64.to_radians(),
            zero_offset: 10.0,
            output_size: 256,
            interpolation: Interpolation::Bilinear,
        }
    }
}

impl WedgeSpec {
    pub fn validate(&self) -> Result<(), RenderError> {
        if !(self.angle_span > 0.0 && self.angle_span <= std::f64::consts::PI) {
            return Err(RenderError::InvalidSpec(format!(
                "angle_span {} must lie in (0, pi]",
                self.angle_span
            )));
        }
        if !(self.zero_offset.is_finite() && self.zero_offset >= 0.0) {
            return Err(RenderError::InvalidSpec(format!(
                "zero_offset {} must be non-negative",
                self.zero_offset
            )));
        }
        if self.output_size == 0 {
            return Err(RenderError::InvalidSpec("output_size must be positive".into()));
        }
        Ok(())
    }

    /// Beam angle of row `row` out of `rows`, measured from straight down,
    /// positive to the right.
    pub fn beam_angle(&self, row: usize, rows: usize) -> f64 {
        if rows < 2 {
            0.0
        } else {
            -self.angle_span / 2.0 + row as f64 * self.angle_span / (rows - 1) as f64
        }
    }
}

/// Square fan image; pixels outside the fan are 0 and flagged in `inside`.
#[derive(Debug, Clone, PartialEq)]
pub struct WedgeImage {
    pub size: usize,
    pub values: Vec<f64>,
    pub inside: Vec<bool>,
}

struct FanGeometry {
    half: f64,
    scale: f64,
    y_offset: f64,
    size: usize,
}

impl FanGeometry {
    fn new(spec: &WedgeSpec, samples: usize) -> Self {
        let half = spec.angle_span / 2.0;
        let reach = spec.zero_offset + (samples - 1) as f64;
        let extent = (2.0 * reach * half.sin()).max(reach).max(1.0);
        let scale = extent / spec.output_size as f64;
        FanGeometry {
            half,
            scale,
            y_offset: (extent - reach) / 2.0,
            size: spec.output_size,
        }
    }

    /// Output pixel centre to `(radius, angle)` about the apex.
    fn polar(&self, px: usize, py: usize) -> (f64, f64) {
        let x = (px as f64 + 0.5 - self.size as f64 / 2.0) * self.scale;
        let y = (py as f64 + 0.5) * self.scale - self.y_offset;
        (x.hypot(y), x.atan2(y))
    }

    /// Output pixel containing the point at `(radius, angle)`.
    fn pixel_at(&self, radius: f64, angle: f64) -> (usize, usize) {
        let x = radius * angle.sin();
        let y = radius * angle.cos();
        let px = (x / self.scale + self.size as f64 / 2.0).floor() as usize;
        let py = ((y + self.y_offset) / self.scale).floor() as usize;
        (px, py)
    }
}

pub fn wedge_buffer(img: &MeanImage, spec: &WedgeSpec) -> Result<WedgeImage, RenderError> {
    spec.validate()?;
    let (samples, beams) = img.dims();
    let geo = FanGeometry::new(spec, samples);
    let size = spec.output_size;
    let mut values = vec![0.0; size * size];
    let mut inside = vec![false; size * size];

    let beam_step = if beams > 1 {
        spec.angle_span / (beams - 1) as f64
    } else {
        f64::INFINITY
    };
    for py in 0..size {
        for px in 0..size {
            let (r, theta) = geo.polar(px, py);
            if theta.abs() > geo.half || !r.is_finite() {
                continue;
            }
            let b = if beams > 1 { (theta + geo.half) / beam_step } else { 0.0 };
            let q = r - spec.zero_offset;
            if !(0.0..=(beams - 1) as f64).contains(&b) || !(0.0..=(samples - 1) as f64).contains(&q) {
                continue;
            }
            let v = match spec.interpolation {
                Interpolation::Nearest => img.get(b.round() as usize, q.round() as usize),
                Interpolation::Bilinear => {
                    let (b0, q0) = (b.floor() as usize, q.floor() as usize);
                    let (b1, q1) = ((b0 + 1).min(beams - 1), (q0 + 1).min(samples - 1));
                    let (fb, fq) = (b - b0 as f64, q - q0 as f64);
                    let top = img.get(b0, q0) * (1.0 - fq) + img.get(b0, q1) * fq;
                    let bottom = img.get(b1, q0) * (1.0 - fq) + img.get(b1, q1) * fq;
                    top * (1.0 - fb) + bottom * fb
                }
            };
            values[py * size + px] = v;
            inside[py * size + px] = true;
        }
    }
    Ok(WedgeImage {
        size,
        values,
        inside,
    })
}

/// Output pixel containing the fan point at `radius` samples from the apex
/// along `angle`, for a `samples`-wide image.
pub fn wedge_pixel_at(spec: &WedgeSpec, samples: usize, radius: f64, angle: f64) -> (usize, usize) {
    FanGeometry::new(spec, samples).pixel_at(radius, angle)
}

pub fn render_wedge(img: &MeanImage, spec: &WedgeSpec, out: &Path) -> Result<PathBuf, RenderError> {
    let wedge = wedge_buffer(img, spec)?;
    let mut rgb = RgbBuffer::filled(wedge.size, wedge.size, [0, 0, 0]);
    for (k, &v) in wedge.values.iter().enumerate() {
        let g = v.round().clamp(0.0, 255.0) as u8;
        rgb.set(k % wedge.size, k / wedge.size, [g, g, g]);
    }
    ensure_parent(out)?;
    write_png(out, &rgb)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_image_gives_uniform_fan() {
        let img = MeanImage::new(40, 16, vec![90.0; 40 * 16]).unwrap();
        let spec = WedgeSpec { output_size: 96, ..WedgeSpec::default() };
        let w = wedge_buffer(&img, &spec).unwrap();
        let inside = w.inside.iter().filter(|&&b| b).count();
        assert!(inside > 96 * 96 / 5, "{inside}");
        for (v, &ins) in w.values.iter().zip(&w.inside) {
            if ins {
                assert!((v - 90.0).abs() < 1e-12);
            } else {
                assert_eq!(*v, 0.0);
            }
        }
        // apex region lies before the first sample
        assert!(!w.inside[48]);
    }

    #[test]
    fn bright_row_becomes_ray_at_its_beam_angle() {
        let (samples, beams, bright) = (60, 9, 6);
        let mut pixels = vec![10.0; samples * beams];
        pixels[bright * samples..(bright + 1) * samples].fill(250.0);
        let img = MeanImage::new(samples, beams, pixels).unwrap();
        let spec = WedgeSpec {
            output_size: 200,
            interpolation: Interpolation::Nearest,
            ..WedgeSpec::default()
        };
        let w = wedge_buffer(&img, &spec).unwrap();
        // analytic ray: angle -span/2 + j * span / (beams - 1)
        let angle = -spec.angle_span / 2.0 + bright as f64 * spec.angle_span / (beams - 1) as f64;
        assert_eq!(angle, spec.beam_angle(bright, beams));
        for k in 0..20 {
            let radius = spec.zero_offset + 20.0 + k as f64 * 1.8;
            let (px, py) = wedge_pixel_at(&spec, samples, radius, angle);
            assert_eq!(w.values[py * w.size + px], 250.0, "radius {radius}");
            let (qx, qy) = wedge_pixel_at(&spec, samples, radius, spec.beam_angle(bright - 2, beams));
            assert_eq!(w.values[qy * w.size + qx], 10.0, "radius {radius}");
        }
    }

    #[test]
    fn interpolation_stays_within_source_range() {
        let pixels: Vec<f64> = (0..30 * 12).map(|i| ((i * 97) % 181) as f64 + 30.0).collect();
        let (lo, hi) = (30.0, 210.0);
        let img = MeanImage::new(30, 12, pixels).unwrap();
        for interp in [Interpolation::Nearest, Interpolation::Bilinear] {
            let spec = WedgeSpec { output_size: 80, interpolation: interp, ..WedgeSpec::default() };
            let w = wedge_buffer(&img, &spec).unwrap();
            for (v, &ins) in w.values.iter().zip(&w.inside) {
                if ins {
                    assert!((lo..=hi).contains(v), "{v}");
                }
            }
        }
    }

    #[test]
    fn invalid_specs() {
        let d = WedgeSpec::default();
        assert!(WedgeSpec { angle_span: 0.0, ..d }.validate().is_err());
        assert!(WedgeSpec { angle_span: 4.0, ..d }.validate().is_err());
        assert!(WedgeSpec { zero_offset: -1.0, ..d }.validate().is_err());
        assert!(WedgeSpec { output_size: 0, ..d }.validate().is_err());
    }
}
