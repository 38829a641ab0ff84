//! Session-level analysis: one mean image per utterance, all-pairs similarity
//! matrices with a NaN diagonal, descriptive statistics and block change
//! points.

mod changepoint;
mod pipeline;

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::ingest::{check_uniform_dims, IngestError, Session, Utterance};
use crate::metrics::{
    cw_ssim_prepared, mse, ssim_prepared, CwSsimParams, CwSsimPrepared, MeanImage, MetricError,
    SsimParams, SsimPrepared,
};
use crate::render::RenderError;

pub use changepoint::{detect_change_points, ChangePointParams, ChangePointReport};
pub use pipeline::{analyze_session, AnalysisConfig, EmitOptions};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Session(#[from] IngestError),
    #[error("{0}")]
    TooFewUtterances(String),
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Render(#[from] RenderError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MetricKind {
    #[serde(rename = "MSE")]
    Mse,
    #[serde(rename = "SSIM")]
    Ssim,
    #[serde(rename = "CW-SSIM")]
    CwSsim,
}

impl MetricKind {
    pub const ALL: [MetricKind; 3] = [MetricKind::Mse, MetricKind::Ssim, MetricKind::CwSsim];

    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Mse => "MSE",
            MetricKind::Ssim => "SSIM",
            MetricKind::CwSsim => "CW-SSIM",
        }
    }

    /// File-name friendly form.
    pub fn slug(self) -> &'static str {
        match self {
            MetricKind::Mse => "mse",
            MetricKind::Ssim => "ssim",
            MetricKind::CwSsim => "cwssim",
        }
    }

    /// Whether larger values mean less similar images.
    pub fn is_distance(self) -> bool {
        matches!(self, MetricKind::Mse)
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A metric together with its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Metric {
    Mse,
    Ssim(SsimParams),
    CwSsim(CwSsimParams),
}

impl Metric {
    pub fn kind(&self) -> MetricKind {
        match self {
            Metric::Mse => MetricKind::Mse,
            Metric::Ssim(_) => MetricKind::Ssim,
            Metric::CwSsim(_) => MetricKind::CwSsim,
        }
    }

    /// Short hex digest of the metric name and its parameters.
    pub fn fingerprint(&self) -> String {
        let params = match self {
            Metric::Mse => serde_json::Value::Null,
            Metric::Ssim(p) => serde_json::to_value(p).expect("plain struct"),
            Metric::CwSsim(p) => serde_json::to_value(p).expect("plain struct"),
        };
        let doc = serde_json::json!({ "metric": self.kind().name(), "params": params });
        let digest = Sha256::digest(doc.to_string().as_bytes());
        hex::encode(&digest[..8])
    }
}

/// Pixel-wise mean over every frame of the utterance.
///
/// Sums are accumulated exactly in integers, so the result does not depend
/// on frame order.
pub fn mean_image(u: &Utterance) -> MeanImage {
    let (w, h) = u.dims();
    let mut sums = vec![0u64; w * h];
    for frame in u.frames() {
        for (s, &p) in sums.iter_mut().zip(frame.pixels()) {
            *s += p as u64;
        }
    }
    let n = u.frames().len() as f64;
    let pixels = sums.into_iter().map(|s| s as f64 / n).collect();
    MeanImage::new(w, h, pixels).expect("averages of 8-bit pixels stay in range")
}

/// `n` x `n` comparison of every utterance pair, NaN on the diagonal.
#[derive(Debug, Clone)]
pub struct SimilarityMatrix {
    metric: MetricKind,
    n: usize,
    values: Vec<f64>,
    utterance_ids: Vec<String>,
    params_fingerprint: String,
}

impl SimilarityMatrix {
    /// Builds a matrix from row-major values, checking the NaN diagonal,
    /// exact symmetry and finite off-diagonal entries.
    pub fn from_parts(
        metric: MetricKind,
        utterance_ids: Vec<String>,
        values: Vec<f64>,
        params_fingerprint: String,
    ) -> Result<Self, AnalysisError> {
        let n = utterance_ids.len();
        if values.len() != n * n {
            return Err(AnalysisError::InvalidMatrix(format!(
                "{} values for {n} utterances",
                values.len()
            )));
        }
        for i in 0..n {
            if !values[i * n + i].is_nan() {
                return Err(AnalysisError::InvalidMatrix(format!(
                    "diagonal entry {i} is not NaN"
                )));
            }
            for j in (i + 1)..n {
                let (a, b) = (values[i * n + j], values[j * n + i]);
                if !a.is_finite() || a.to_bits() != b.to_bits() {
                    return Err(AnalysisError::InvalidMatrix(format!(
                        "entries ({i},{j})={a} and ({j},{i})={b} must be finite and equal"
                    )));
                }
            }
        }
        Ok(SimilarityMatrix {
            metric,
            n,
            values,
            utterance_ids,
            params_fingerprint,
        })
    }

    pub fn metric(&self) -> MetricKind {
        self.metric
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    /// Row-major values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn utterance_ids(&self) -> &[String] {
        &self.utterance_ids
    }

    pub fn params_fingerprint(&self) -> &str {
        &self.params_fingerprint
    }

    /// Upper-triangle entries `(i, j)` with `i < j`, row by row.
    pub fn upper_triangle(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).flat_map(move |i| ((i + 1)..self.n).map(move |j| self.get(i, j)))
    }
}

impl PartialEq for SimilarityMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.metric == other.metric
            && self.n == other.n
            && self.utterance_ids == other.utterance_ids
            && self.params_fingerprint == other.params_fingerprint
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

enum Prepared {
    Mse(Vec<MeanImage>),
    Ssim(Vec<SsimPrepared>),
    CwSsim(Vec<CwSsimPrepared>),
}

impl Prepared {
    fn new(means: &[MeanImage], metric: &Metric) -> Result<Self, MetricError> {
        Ok(match metric {
            Metric::Mse => Prepared::Mse(means.to_vec()),
            Metric::Ssim(p) => Prepared::Ssim(
                means
                    .par_iter()
                    .map(|m| SsimPrepared::new(m, p))
                    .collect::<Result<_, _>>()?,
            ),
            Metric::CwSsim(p) => Prepared::CwSsim(
                means
                    .par_iter()
                    .map(|m| CwSsimPrepared::new(m, p))
                    .collect::<Result<_, _>>()?,
            ),
        })
    }

    fn compare(&self, i: usize, j: usize) -> Result<f64, MetricError> {
        match self {
            Prepared::Mse(m) => mse(&m[i], &m[j]),
            Prepared::Ssim(p) => ssim_prepared(&p[i], &p[j]),
            Prepared::CwSsim(p) => cw_ssim_prepared(&p[i], &p[j]),
        }
    }
}

/// Matrix over precomputed mean images. Each unordered pair is evaluated
/// once, in parallel on the current rayon pool, and mirrored.
pub fn similarity_matrix_from_means(
    utterance_ids: Vec<String>,
    means: &[MeanImage],
    metric: &Metric,
) -> Result<SimilarityMatrix, AnalysisError> {
    let n = means.len();
    if n != utterance_ids.len() {
        return Err(AnalysisError::InvalidMatrix(format!(
            "{} ids for {n} images",
            utterance_ids.len()
        )));
    }
    if n == 0 {
        return Err(AnalysisError::TooFewUtterances(
            "a similarity matrix needs at least one utterance".into(),
        ));
    }
    if let Some(m) = means.iter().find(|m| m.dims() != means[0].dims()) {
        let ((w, h), (mw, mh)) = (means[0].dims(), m.dims());
        return Err(MetricError::DimensionMismatch(w, h, mw, mh).into());
    }
    let prepared = Prepared::new(means, metric)?;
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    let scores = pairs
        .par_iter()
        .map(|&(i, j)| prepared.compare(i, j))
        .collect::<Result<Vec<f64>, _>>()?;

    let mut values = vec![f64::NAN; n * n];
    for (&(i, j), &v) in pairs.iter().zip(&scores) {
        values[i * n + j] = v;
        values[j * n + i] = v;
    }
    SimilarityMatrix::from_parts(metric.kind(), utterance_ids, values, metric.fingerprint())
}

pub fn session_means(s: &Session) -> Result<Vec<MeanImage>, AnalysisError> {
    check_uniform_dims(s.utterances())?;
    Ok(s.utterances().par_iter().map(mean_image).collect())
}

pub fn similarity_matrix(s: &Session, metric: &Metric) -> Result<SimilarityMatrix, AnalysisError> {
    let means = session_means(s)?;
    let ids = s.utterances().iter().map(|u| u.id().to_string()).collect();
    similarity_matrix_from_means(ids, &means, metric)
}

/// Mean and population standard deviation of one metric's off-diagonal
/// entries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricStats {
    pub metric: MetricKind,
    pub mean: f64,
    pub std: f64,
    /// Number of utterance pairs summarized.
    pub pairs: usize,
}

impl MetricStats {
    /// `mean (std)` in the layout of a descriptive-statistics table:
    /// integers for MSE, two decimals for the similarity indices.
    pub fn table_cell(&self) -> String {
        if self.metric.is_distance() {
            format!("{:.0} ({:3.0})", self.mean, self.std)
        } else {
            format!("{:.2} ({:.2})", self.mean, self.std)
        }
    }

    pub fn summary_line(&self) -> String {
        format!("{} {}", self.metric.name(), self.table_cell())
    }
}

/// Statistics over the `n(n-1)/2` upper-triangle entries.
pub fn session_stats(m: &SimilarityMatrix) -> Result<MetricStats, AnalysisError> {
    if m.n() < 2 {
        return Err(AnalysisError::TooFewUtterances(format!(
            "statistics need at least 2 utterances, got {}",
            m.n()
        )));
    }
    let values: Vec<f64> = m.upper_triangle().collect();
    let (mean, std) = mean_std(&values);
    Ok(MetricStats {
        metric: m.metric(),
        mean,
        std,
        pairs: values.len(),
    })
}

pub(crate) fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}
