//! Machine-readable session reports.
//!
//! `report.json` carries every parameter, statistic and change point of a run
//! together with the full matrices (diagonal as `null`). Each matrix is also
//! written as `<metric>_matrix.csv`, with utterance ids as the first row and
//! column and the diagonal as the literal `NaN`. Floats are written in their
//! shortest round-trip form, so reloading recovers every value bit for bit.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ensure_parent, HeatmapSpec, RenderError, WedgeSpec};
use crate::analysis::{
    AnalysisError, ChangePointParams, ChangePointReport, MetricKind, MetricStats, SimilarityMatrix,
};
use crate::metrics::{CwSsimParams, SsimParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub metric: MetricKind,
    pub params_fingerprint: String,
    /// Row-major matrix rows; `None` on the diagonal.
    pub values: Vec<Vec<Option<f64>>>,
    pub stats: Option<MetricStats>,
    pub change_points: Option<ChangePointReport>,
    /// Table-style `METRIC mean (std)` line.
    pub summary: Option<String>,
    /// Paths relative to the report's directory.
    pub matrix_csv: Option<String>,
    pub heatmap: Option<String>,
}

impl MetricReport {
    pub fn from_matrix(
        m: &SimilarityMatrix,
        stats: Option<MetricStats>,
        change_points: Option<ChangePointReport>,
    ) -> Self {
        let n = m.n();
        let values = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| Some(m.get(i, j)).filter(|v| !v.is_nan()))
                    .collect()
            })
            .collect();
        MetricReport {
            metric: m.metric(),
            params_fingerprint: m.params_fingerprint().to_string(),
            values,
            summary: stats.as_ref().map(MetricStats::summary_line),
            stats,
            change_points,
            matrix_csv: None,
            heatmap: None,
        }
    }

    pub fn matrix(&self, utterance_ids: &[String]) -> Result<SimilarityMatrix, AnalysisError> {
        let values = self
            .values
            .iter()
            .flat_map(|row| row.iter().map(|v| v.unwrap_or(f64::NAN)))
            .collect();
        SimilarityMatrix::from_parts(
            self.metric,
            utterance_ids.to_vec(),
            values,
            self.params_fingerprint.clone(),
        )
    }

    pub fn csv_name(&self) -> String {
        format!("{}_matrix.csv", self.metric.slug())
    }
}

/// Every setting that influences the numbers in a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportParameters {
    pub ssim: SsimParams,
    pub cwssim: CwSsimParams,
    pub change_points: ChangePointParams,
    pub heatmaps: Vec<HeatmapSpec>,
    pub wedge: WedgeSpec,
    pub ssim_windows: String,
    pub stats_population: String,
    pub mean_images: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionReport {
    pub speaker_id: String,
    pub session_id: String,
    pub utterance_ids: Vec<String>,
    pub metrics: Vec<MetricReport>,
    pub parameters: ReportParameters,
    /// Wedge images, relative to the report's directory.
    pub wedges: Vec<String>,
    pub stats_table: Option<String>,
}

impl SessionReport {
    pub fn metric(&self, kind: MetricKind) -> Option<&MetricReport> {
        self.metrics.iter().find(|m| m.metric == kind)
    }

    pub fn summary_lines(&self) -> Vec<String> {
        self.metrics.iter().filter_map(|m| m.summary.clone()).collect()
    }
}

fn format_err(path: &Path, reason: impl ToString) -> RenderError {
    RenderError::Format {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    }
}

pub fn write_matrix_csv(m: &SimilarityMatrix, out: &Path) -> Result<PathBuf, RenderError> {
    ensure_parent(out)?;
    let mut w = csv::Writer::from_path(out).map_err(|e| format_err(out, e))?;
    let header = std::iter::once(String::new()).chain(m.utterance_ids().iter().cloned());
    w.write_record(header).map_err(|e| format_err(out, e))?;
    for (i, id) in m.utterance_ids().iter().enumerate() {
        let row = std::iter::once(id.clone()).chain((0..m.n()).map(|j| m.get(i, j).to_string()));
        w.write_record(row).map_err(|e| format_err(out, e))?;
    }
    w.flush().map_err(|e| RenderError::io(out, e))?;
    Ok(out.to_path_buf())
}

/// Utterance ids and row-major values of a matrix CSV.
pub fn read_matrix_csv(path: &Path) -> Result<(Vec<String>, Vec<f64>), RenderError> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| format_err(path, e))?;
    let mut records = r.records();
    let header = records
        .next()
        .ok_or_else(|| format_err(path, "missing header row"))?
        .map_err(|e| format_err(path, e))?;
    let ids: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let mut values = Vec::with_capacity(ids.len() * ids.len());
    for (i, rec) in records.enumerate() {
        let rec = rec.map_err(|e| format_err(path, e))?;
        if rec.get(0) != ids.get(i).map(String::as_str) {
            return Err(format_err(path, format!("row {i} label does not match header")));
        }
        for cell in rec.iter().skip(1) {
            values.push(
                cell.parse::<f64>()
                    .map_err(|e| format_err(path, format!("{cell:?}: {e}")))?,
            );
        }
    }
    if values.len() != ids.len() * ids.len() {
        return Err(format_err(path, "matrix is not square"));
    }
    Ok((ids, values))
}

/// Writes `report.json` into `out_dir`, plus one CSV per metric named by
/// [`MetricReport::matrix_csv`]. Returns the report path.
pub fn write_report(r: &SessionReport, out_dir: &Path) -> Result<PathBuf, RenderError> {
    fs::create_dir_all(out_dir).map_err(|e| RenderError::io(out_dir, e))?;
    for m in &r.metrics {
        if let Some(name) = &m.matrix_csv {
            let matrix = m
                .matrix(&r.utterance_ids)
                .map_err(|e| format_err(&out_dir.join(name), e))?;
            write_matrix_csv(&matrix, &out_dir.join(name))?;
        }
    }
    let path = out_dir.join("report.json");
    let mut text = serde_json::to_string_pretty(r).map_err(|e| format_err(&path, e))?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| RenderError::io(&path, e))?;
    Ok(path)
}

pub fn read_report(path: &Path) -> Result<SessionReport, RenderError> {
    let text = fs::read_to_string(path).map_err(|e| RenderError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| format_err(path, e))
}

/// Fixed-width table with one `mean (std)` cell per metric and row.
pub fn stats_table(metrics: &[MetricKind], rows: &[(String, Vec<MetricStats>)]) -> String {
    let label_w = rows.iter().map(|(l, _)| l.len()).max().unwrap_or(0).max("Speaker".len());
    let cell = |stats: &[MetricStats], k: MetricKind| {
        stats
            .iter()
            .find(|s| s.metric == k)
            .map(MetricStats::table_cell)
            .unwrap_or_else(|| "-".into())
    };
    let widths: Vec<usize> = metrics
        .iter()
        .map(|&k| {
            rows.iter()
                .map(|(_, s)| cell(s, k).len())
                .max()
                .unwrap_or(0)
                .max(k.name().len())
        })
        .collect();
    let mut out = format!("{:<label_w$}", "Speaker");
    for (k, w) in metrics.iter().zip(&widths) {
        out.push_str(&format!(" | {:<w$}", k.name()));
    }
    out.push('\n');
    for (label, stats) in rows {
        out.push_str(&format!("{label:<label_w$}"));
        for (&k, w) in metrics.iter().zip(&widths) {
            out.push_str(&format!(" | {:<w$}", cell(stats, k)));
        }
        out.push('\n');
    }
    out
}

pub fn write_stats_table(
    path: &Path,
    metrics: &[MetricKind],
    rows: &[(String, Vec<MetricStats>)],
) -> Result<PathBuf, RenderError> {
    ensure_parent(path)?;
    fs::write(path, stats_table(metrics, rows)).map_err(|e| RenderError::io(path, e))?;
    Ok(path.to_path_buf())
}
