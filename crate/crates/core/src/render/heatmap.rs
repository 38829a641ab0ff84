use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ensure_parent, write_png, Colormap, RenderError, RgbBuffer};
use crate::analysis::{MetricKind, SimilarityMatrix};

/// Utterances between axis ticks.
pub const TICK_EVERY: usize = 10;
const TICK_LEN: usize = 4;
/// Blank band left and above the matrix holding the ticks.
const MARGIN: usize = TICK_LEN + 2;
const BACKGROUND: [u8; 3] = [255, 255, 255];
const TICK_COLOR: [u8; 3] = [0, 0, 0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatmapSpec {
    pub colormap: Colormap,
    /// Explicit `(min, max)`; `None` scales to the finite entries.
    pub value_range: Option<(f64, f64)>,
    pub nan_color: [u8; 3],
    /// Output pixels per matrix cell, per side.
    pub cell_size: usize,
}

impl HeatmapSpec {
    /// Viridis for MSE and SSIM, grayscale for CW-SSIM.
    pub fn for_metric(metric: MetricKind) -> Self {
        HeatmapSpec {
            colormap: match metric {
                MetricKind::CwSsim => Colormap::Gray,
                _ => Colormap::Viridis,
            },
            value_range: None,
            nan_color: [255, 255, 255],
            cell_size: 4,
        }
    }

    pub fn validate(&self) -> Result<(), RenderError> {
        if self.cell_size < 1 {
            return Err(RenderError::InvalidSpec("cell_size must be at least 1".into()));
        }
        if let Some((lo, hi)) = self.value_range {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(RenderError::InvalidSpec(format!(
                    "value_range ({lo}, {hi}) must be finite with min < max"
                )));
            }
        }
        Ok(())
    }
}

fn auto_range(m: &SimilarityMatrix) -> (f64, f64) {
    m.values()
        .iter()
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

/// Pixel buffer of the heatmap: the matrix occupies an `n * cell_size`
/// square at the bottom right, with tick marks every [`TICK_EVERY`]
/// utterances in the margin above and to the left.
pub fn heatmap_buffer(m: &SimilarityMatrix, spec: &HeatmapSpec) -> Result<RgbBuffer, RenderError> {
    spec.validate()?;
    let n = m.n();
    let cs = spec.cell_size;
    let side = MARGIN + n * cs;
    let mut img = RgbBuffer::filled(side, side, BACKGROUND);

    for i in (0..n).step_by(TICK_EVERY) {
        let at = MARGIN + i * cs + cs / 2;
        for t in 0..TICK_LEN {
            img.set(at, t, TICK_COLOR);
            img.set(t, at, TICK_COLOR);
        }
    }

    let (lo, hi) = spec.value_range.unwrap_or_else(|| auto_range(m));
    for i in 0..n {
        for j in 0..n {
            let v = m.get(i, j);
            let color = if v.is_nan() {
                spec.nan_color
            } else if hi > lo {
                spec.colormap.color((v - lo) / (hi - lo))
            } else {
                spec.colormap.color(0.5)
            };
            for y in 0..cs {
                for x in 0..cs {
                    img.set(MARGIN + j * cs + x, MARGIN + i * cs + y, color);
                }
            }
        }
    }
    Ok(img)
}

pub fn render_heatmap(
    m: &SimilarityMatrix,
    spec: &HeatmapSpec,
    out: &Path,
) -> Result<PathBuf, RenderError> {
    let img = heatmap_buffer(m, spec)?;
    ensure_parent(out)?;
    write_png(out, &img)
}
