use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    detect_change_points, session_stats, similarity_matrix_from_means, AnalysisError,
    ChangePointParams, Metric, MetricKind,
};
use crate::ingest::{check_uniform_dims, Session};
use crate::metrics::{CwSsimParams, SsimParams};
use crate::render::{
    render_heatmap, render_wedge, write_report, write_stats_table, HeatmapSpec, MetricReport,
    ReportParameters, SessionReport, WedgeSpec,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmitOptions {
    pub heatmaps: bool,
    pub wedges: bool,
    pub report: bool,
    pub stats: bool,
}

impl Default for EmitOptions {
    fn default() -> Self {
        EmitOptions {
            heatmaps: true,
            wedges: false,
            report: true,
            stats: true,
        }
    }
}

impl EmitOptions {
    pub fn none() -> Self {
        EmitOptions {
            heatmaps: false,
            wedges: false,
            report: false,
            stats: false,
        }
    }

    pub fn any(&self) -> bool {
        self.heatmaps || self.wedges || self.report || self.stats
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub metrics: Vec<MetricKind>,
    pub ssim: SsimParams,
    pub cwssim: CwSsimParams,
    pub change_points: ChangePointParams,
    pub heatmap_cell_size: usize,
    pub wedge: WedgeSpec,
    pub emit: EmitOptions,
    /// Worker threads for pairwise comparisons; `None` uses every core.
    pub jobs: Option<usize>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            metrics: MetricKind::ALL.to_vec(),
            ssim: SsimParams::default(),
            cwssim: CwSsimParams::default(),
            change_points: ChangePointParams::default(),
            heatmap_cell_size: 4,
            wedge: WedgeSpec::default(),
            emit: EmitOptions::default(),
            jobs: None,
        }
    }
}

impl AnalysisConfig {
    pub fn metric(&self, kind: MetricKind) -> Metric {
        match kind {
            MetricKind::Mse => Metric::Mse,
            MetricKind::Ssim => Metric::Ssim(self.ssim),
            MetricKind::CwSsim => Metric::CwSsim(self.cwssim),
        }
    }

    pub fn heatmap_spec(&self, kind: MetricKind) -> HeatmapSpec {
        HeatmapSpec {
            cell_size: self.heatmap_cell_size,
            ..HeatmapSpec::for_metric(kind)
        }
    }

    pub fn validate(&self) -> Result<(), AnalysisError> {
        if self.metrics.is_empty() {
            return Err(AnalysisError::Config("no metrics selected".into()));
        }
        if self.jobs == Some(0) {
            return Err(AnalysisError::Config("jobs must be at least 1".into()));
        }
        let mut kinds = self.metrics.clone();
        kinds.sort();
        kinds.dedup();
        if kinds.len() != self.metrics.len() {
            return Err(AnalysisError::Config("metrics listed more than once".into()));
        }
        self.ssim.validate()?;
        self.cwssim.validate()?;
        self.change_points.validate()?;
        for &k in &self.metrics {
            self.heatmap_spec(k).validate()?;
        }
        self.wedge.validate()?;
        Ok(())
    }

    fn parameters(&self) -> ReportParameters {
        ReportParameters {
            ssim: self.ssim,
            cwssim: self.cwssim,
            change_points: self.change_points,
            heatmaps: self.metrics.iter().map(|&k| self.heatmap_spec(k)).collect(),
            wedge: self.wedge,
            ssim_windows: "valid".into(),
            stats_population: "upper-triangle off-diagonal entries, population standard deviation"
                .into(),
            mean_images: "raw scanline pixels, all frames".into(),
        }
    }
}

/// Runs every configured metric over `session` and, when `out_dir` is given,
/// writes the selected artifacts there.
///
/// Statistics need two utterances and change points four; smaller sessions
/// leave those fields empty.
pub fn analyze_session(
    session: &Session,
    config: &AnalysisConfig,
    out_dir: Option<&Path>,
) -> Result<SessionReport, AnalysisError> {
    config.validate()?;
    check_uniform_dims(session.utterances())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs.unwrap_or(0))
        .build()
        .map_err(|e| AnalysisError::Config(e.to_string()))?;
    pool.install(|| run(session, config, out_dir))
}

fn run(
    session: &Session,
    config: &AnalysisConfig,
    out_dir: Option<&Path>,
) -> Result<SessionReport, AnalysisError> {
    let ids: Vec<String> = session.utterances().iter().map(|u| u.id().to_string()).collect();
    let means: Vec<_> = session.utterances().par_iter().map(super::mean_image).collect();
    let n = ids.len();

    let mut metrics = Vec::with_capacity(config.metrics.len());
    let mut matrices = Vec::with_capacity(config.metrics.len());
    for &kind in &config.metrics {
        let m = similarity_matrix_from_means(ids.clone(), &means, &config.metric(kind))?;
        let stats = if n >= 2 { Some(session_stats(&m)?) } else { None };
        let cps = if n >= 4 {
            Some(detect_change_points(&m, &config.change_points)?)
        } else {
            None
        };
        metrics.push(MetricReport::from_matrix(&m, stats, cps));
        matrices.push(m);
    }

    let mut report = SessionReport {
        speaker_id: session.speaker_id().to_string(),
        session_id: session.session_id().to_string(),
        utterance_ids: ids,
        metrics,
        parameters: config.parameters(),
        wedges: Vec::new(),
        stats_table: None,
    };

    let Some(dir) = out_dir else {
        return Ok(report);
    };
    let emit = config.emit;
    if emit.heatmaps {
        for (mr, m) in report.metrics.iter_mut().zip(&matrices) {
            let name = format!("heatmap_{}.png", m.metric().slug());
            render_heatmap(m, &config.heatmap_spec(m.metric()), &dir.join(&name))?;
            mr.heatmap = Some(name);
        }
    }
    if emit.wedges {
        let names: Vec<String> = report.utterance_ids.iter().map(|id| format!("wedges/{id}.png")).collect();
        names
            .par_iter()
            .zip(&means)
            .try_for_each(|(name, img)| render_wedge(img, &config.wedge, &dir.join(name)).map(drop))?;
        report.wedges = names;
    }
    if emit.stats {
        let stats: Vec<_> = report.metrics.iter().filter_map(|m| m.stats).collect();
        if !stats.is_empty() {
            let label = report.speaker_id.clone();
            write_stats_table(&dir.join("stats.txt"), &config.metrics, &[(label, stats)])?;
            report.stats_table = Some("stats.txt".into());
        }
    }
    if emit.report {
        for m in &mut report.metrics {
            m.matrix_csv = Some(m.csv_name());
        }
        write_report(&report, dir)?;
    }
    Ok(report)
}
