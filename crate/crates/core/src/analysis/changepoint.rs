//! Greedy binary block segmentation of a similarity matrix.
//!
//! A probe that moves between two utterances splits the matrix into blocks
//! that are internally similar but differ from each other. Segments are split
//! recursively at the index with the largest block contrast,
//!
//! ```text
//!     contrast(k) = cross-block mean - (left within-block mean + right within-block mean) / 2
//! ```
//!
//! computed on dissimilarities (MSE as is, `1 - value` for SSIM and CW-SSIM).
//! A split is kept only when its contrast exceeds a threshold fixed once for
//! the whole matrix. Averaging the two within-block means, instead of pooling
//! their pairs, cancels per-utterance offsets that would otherwise make
//! lopsided splits look contrasted.

use serde::{Deserialize, Serialize};

use super::{mean_std, AnalysisError, MetricKind, SimilarityMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChangePointParams {
    /// Threshold as a multiple of the off-diagonal standard deviation.
    pub threshold_factor: f64,
    /// Absolute threshold overriding `threshold_factor` when set.
    pub threshold: Option<f64>,
    /// Maximum recursion depth.
    pub max_depth: usize,
    /// Smallest block a split may leave on either side.
    pub min_block: usize,
}

impl Default for ChangePointParams {
    fn default() -> Self {
        ChangePointParams {
            threshold_factor: 0.5,
            threshold: None,
            max_depth: 4,
            min_block: 3,
        }
    }
}

impl ChangePointParams {
    pub fn validate(&self) -> Result<(), AnalysisError> {
        let bad = |msg: String| Err(AnalysisError::Config(msg));
        if !(self.threshold_factor.is_finite() && self.threshold_factor >= 0.0) {
            return bad(format!(
                "threshold_factor {} must be non-negative",
                self.threshold_factor
            ));
        }
        if let Some(t) = self.threshold {
            if !(t.is_finite() && t >= 0.0) {
                return bad(format!("threshold {t} must be non-negative"));
            }
        }
        if self.min_block < 2 {
            return bad(format!("min_block {} must be at least 2", self.min_block));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangePointReport {
    pub metric: MetricKind,
    /// First utterance index of each new block, increasing.
    pub boundaries: Vec<usize>,
    /// Mean metric value over the pairs inside each block, in block order.
    pub block_means: Vec<f64>,
    pub threshold_used: f64,
}

struct Dissimilarity {
    n: usize,
    values: Vec<f64>,
}

impl Dissimilarity {
    fn new(m: &SimilarityMatrix) -> Self {
        let flip = !m.metric().is_distance();
        let values = m
            .values()
            .iter()
            .map(|&v| if flip { 1.0 - v } else { v })
            .collect();
        Dissimilarity { n: m.n(), values }
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    fn within(&self, lo: usize, hi: usize) -> f64 {
        let mut sum = 0.0;
        for i in lo..hi {
            for j in (i + 1)..hi {
                sum += self.at(i, j);
            }
        }
        let len = hi - lo;
        sum / (len * (len - 1) / 2) as f64
    }

    fn cross(&self, lo: usize, mid: usize, hi: usize) -> f64 {
        let mut sum = 0.0;
        for i in lo..mid {
            for j in mid..hi {
                sum += self.at(i, j);
            }
        }
        sum / ((mid - lo) * (hi - mid)) as f64
    }

    fn contrast(&self, lo: usize, mid: usize, hi: usize) -> f64 {
        self.cross(lo, mid, hi) - 0.5 * (self.within(lo, mid) + self.within(mid, hi))
    }
}

fn split(
    d: &Dissimilarity,
    lo: usize,
    hi: usize,
    depth: usize,
    params: &ChangePointParams,
    threshold: f64,
    out: &mut Vec<usize>,
) {
    if depth >= params.max_depth || hi - lo < 2 * params.min_block {
        return;
    }
    let mut best: Option<(usize, f64)> = None;
    for k in (lo + params.min_block)..=(hi - params.min_block) {
        let c = d.contrast(lo, k, hi);
        if best.is_none_or(|(_, b)| c > b) {
            best = Some((k, c));
        }
    }
    if let Some((k, c)) = best {
        if c > threshold {
            out.push(k);
            split(d, lo, k, depth + 1, params, threshold, out);
            split(d, k, hi, depth + 1, params, threshold, out);
        }
    }
}

/// Flags utterance indices where the matrix's block structure changes.
pub fn detect_change_points(
    m: &SimilarityMatrix,
    params: &ChangePointParams,
) -> Result<ChangePointReport, AnalysisError> {
    params.validate()?;
    let n = m.n();
    if n < 4 {
        return Err(AnalysisError::TooFewUtterances(format!(
            "change-point detection needs at least 4 utterances, got {n}"
        )));
    }
    let d = Dissimilarity::new(m);
    let threshold = match params.threshold {
        Some(t) => t,
        None => {
            let upper: Vec<f64> = m.upper_triangle().collect();
            params.threshold_factor * mean_std(&upper).1
        }
    };
    let mut boundaries = Vec::new();
    split(&d, 0, n, 0, params, threshold, &mut boundaries);
    boundaries.sort_unstable();

    let edges: Vec<usize> = std::iter::once(0)
        .chain(boundaries.iter().copied())
        .chain(std::iter::once(n))
        .collect();
    let block_means = edges
        .windows(2)
        .map(|w| {
            let vals: Vec<f64> = (w[0]..w[1])
                .flat_map(|i| ((i + 1)..w[1]).map(move |j| (i, j)))
                .map(|(i, j)| m.get(i, j))
                .collect();
            vals.iter().sum::<f64>() / vals.len() as f64
        })
        .collect();

    Ok(ChangePointReport {
        metric: m.metric(),
        boundaries,
        block_means,
        threshold_used: threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Matrix with value `low` inside blocks and `high` across them.
    fn block_matrix(n: usize, edges: &[usize], low: f64, high: f64) -> SimilarityMatrix {
        let block = |i: usize| edges.iter().filter(|&&e| e <= i).count();
        let mut values = vec![f64::NAN; n * n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    values[i * n + j] = if block(i) == block(j) { low } else { high };
                }
            }
        }
        let ids = (0..n).map(|i| i.to_string()).collect();
        SimilarityMatrix::from_parts(MetricKind::Mse, ids, values, String::new()).unwrap()
    }

    #[test]
    fn uniform_matrix_has_no_boundaries() {
        let m = block_matrix(10, &[], 5.0, 5.0);
        let r = detect_change_points(&m, &ChangePointParams::default()).unwrap();
        assert!(r.boundaries.is_empty());
        assert_eq!(r.block_means, vec![5.0]);
        assert_eq!(r.threshold_used, 0.0);
    }

    #[test]
    fn recovers_clean_blocks() {
        let m = block_matrix(14, &[4, 9], 1.0, 10.0);
        let r = detect_change_points(&m, &ChangePointParams::default()).unwrap();
        assert_eq!(r.boundaries, vec![4, 9]);
        assert_eq!(r.block_means, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn similarity_metrics_are_flipped() {
        let mut m = block_matrix(8, &[4], 0.9, 0.2);
        m.metric = MetricKind::Ssim;
        let r = detect_change_points(&m, &ChangePointParams::default()).unwrap();
        assert_eq!(r.boundaries, vec![4]);
    }

    #[test]
    fn depth_cap_limits_boundaries() {
        let m = block_matrix(24, &[3, 6, 9, 12, 15, 18, 21], 0.0, 1.0);
        let params = ChangePointParams { max_depth: 1, ..ChangePointParams::default() };
        let r = detect_change_points(&m, &params).unwrap();
        assert_eq!(r.boundaries.len(), 1);
    }

    #[test]
    fn too_small_and_bad_params() {
        let m = block_matrix(3, &[], 1.0, 1.0);
        assert!(detect_change_points(&m, &ChangePointParams::default()).is_err());
        let m = block_matrix(6, &[], 1.0, 1.0);
        let bad = ChangePointParams { min_block: 1, ..ChangePointParams::default() };
        assert!(detect_change_points(&m, &bad).is_err());
    }
}
