//! Output artifacts: similarity heatmaps, wedge (fan) views of mean images,
//! JSON reports with CSV matrices, and manifest sessions.
//!
//! PNGs are 8-bit RGB with only the IHDR, IDAT and IEND chunks, so identical
//! inputs always produce identical files.

mod colormap;
mod heatmap;
mod manifest;
mod report;
mod wedge;

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub use colormap::Colormap;
pub use heatmap::{heatmap_buffer, render_heatmap, HeatmapSpec, TICK_EVERY};
pub use manifest::write_manifest_session;
pub use report::{
    read_matrix_csv, read_report, stats_table, write_matrix_csv, write_report, write_stats_table,
    MetricReport, ReportParameters, SessionReport,
};
pub use wedge::{render_wedge, wedge_buffer, wedge_pixel_at, Interpolation, WedgeImage, WedgeSpec};

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: png encoding failed: {reason}")]
    Png { path: PathBuf, reason: String },
    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },
    #[error("invalid render spec: {0}")]
    InvalidSpec(String),
}

impl RenderError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        RenderError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Packed 8-bit RGB raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbBuffer {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl RgbBuffer {
    pub fn filled(width: usize, height: usize, color: [u8; 3]) -> Self {
        RgbBuffer {
            width,
            height,
            data: color.repeat(width * height),
        }
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = 3 * (y * self.width + x);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn set(&mut self, x: usize, y: usize, color: [u8; 3]) {
        let i = 3 * (y * self.width + x);
        self.data[i..i + 3].copy_from_slice(&color);
    }
}

pub fn write_png(path: &Path, img: &RgbBuffer) -> Result<PathBuf, RenderError> {
    let png_err = |e: png::EncodingError| RenderError::Png {
        path: path.to_path_buf(),
        reason: e.to_string(),
    };
    let file = File::create(path).map_err(|e| RenderError::io(path, e))?;
    let mut encoder = png::Encoder::new(BufWriter::new(file), img.width as u32, img.height as u32);
    encoder.set_color(png::ColorType::Rgb);
    encoder.set_depth(png::BitDepth::Eight);
    let mut writer = encoder.write_header().map_err(png_err)?;
    writer.write_image_data(&img.data).map_err(png_err)?;
    writer.finish().map_err(png_err)?;
    Ok(path.to_path_buf())
}

pub(crate) fn ensure_parent(path: &Path) -> Result<(), RenderError> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => {
            std::fs::create_dir_all(dir).map_err(|e| RenderError::io(dir, e))
        }
        _ => Ok(()),
    }
}
