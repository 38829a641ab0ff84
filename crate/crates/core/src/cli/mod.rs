//! Command-line front end: `analyze`, `synth` and `batch`.
//!
//! Exit codes: 0 success, 1 ingestion or usage error, 2 analysis failure,
//! 3 emission failure, 4 when any speaker of a batch failed. Summary lines
//! go to standard output, diagnostics to standard error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::analysis::{analyze_session, AnalysisConfig, AnalysisError, EmitOptions, MetricKind, MetricStats};
use crate::ingest::{
    generate_synthetic_session, load_manifest_session, load_ultrasuite_session, IngestError, Session,
    SyntheticSpec,
};
use crate::render::{stats_table, write_manifest_session, RenderError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INGEST: i32 = 1;
pub const EXIT_ANALYSIS: i32 = 2;
pub const EXIT_EMIT: i32 = 3;
pub const EXIT_BATCH: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "uti-misalign", version, about = "Quantify transducer misalignment across ultrasound tongue-imaging sessions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Analyze one session.
    Analyze(AnalyzeArgs),
    /// Write a synthetic session in manifest format.
    Synth(SynthArgs),
    /// Analyze every speaker directory under a root.
    Batch(BatchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MetricArg {
    Mse,
    Ssim,
    Cwssim,
}

impl From<MetricArg> for MetricKind {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Mse => MetricKind::Mse,
            MetricArg::Ssim => MetricKind::Ssim,
            MetricArg::Cwssim => MetricKind::CwSsim,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EmitArg {
    Heatmaps,
    Wedges,
    Report,
    Stats,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Metrics to compute.
    #[arg(long, value_enum, value_delimiter = ',')]
    metrics: Option<Vec<MetricArg>>,
    /// Artifacts to write.
    #[arg(long, value_enum, value_delimiter = ',')]
    emit: Option<Vec<EmitArg>>,
    /// Worker threads for pairwise comparisons.
    #[arg(long)]
    jobs: Option<usize>,
    /// JSON analysis configuration; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[group(id = "source", required = true, multiple = false)]
struct SourceArgs {
    /// UltraSuite session directory.
    #[arg(long, group = "source")]
    input: Option<PathBuf>,
    /// Session manifest.
    #[arg(long, group = "source")]
    manifest: Option<PathBuf>,
    /// Synthetic session specification.
    #[arg(long, group = "source")]
    spec: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[command(flatten)]
    common: CommonArgs,
    /// Texture seed for `--spec` sessions.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Overrides the spec's texture seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct BatchArgs {
    /// Directory holding one sub-directory per speaker.
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Analysis(AnalysisError),
    #[error(transparent)]
    Emit(#[from] RenderError),
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Render(r) => CliError::Emit(r),
            AnalysisError::Config(msg) => CliError::Usage(msg),
            other => CliError::Analysis(other),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Ingest(_) => EXIT_INGEST,
            CliError::Analysis(_) => EXIT_ANALYSIS,
            CliError::Emit(_) => EXIT_EMIT,
        }
    }
}

/// Parses `args` (program name first) and runs the command, returning the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INGEST } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            return code;
        }
    };
    let result = match cli.command {
        Command::Analyze(a) => cmd_analyze(&a, out),
        Command::Synth(a) => cmd_synth(&a, out),
        Command::Batch(a) => return cmd_batch(&a, out, err),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn build_config(common: &CommonArgs) -> Result<AnalysisConfig, CliError> {
    let mut config = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        }
        None => AnalysisConfig::default(),
    };
    if let Some(ms) = &common.metrics {
        config.metrics = ms.iter().map(|&m| m.into()).collect();
    }
    if let Some(es) = &common.emit {
        config.emit = EmitOptions {
            heatmaps: es.contains(&EmitArg::Heatmaps),
            wedges: es.contains(&EmitArg::Wedges),
            report: es.contains(&EmitArg::Report),
            stats: es.contains(&EmitArg::Stats),
        };
    }
    if common.jobs.is_some() {
        config.jobs = common.jobs;
    }
    config.validate()?;
    Ok(config)
}

fn read_spec(path: &Path, seed: Option<u64>) -> Result<SyntheticSpec, CliError> {
    let text = fs::read_to_string(path).map_err(|e| IngestError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut spec: SyntheticSpec = serde_json::from_str(&text).map_err(|e| IngestError::Schema {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    if let Some(s) = seed {
        spec.texture_seed = s;
    }
    spec.validate()?;
    Ok(spec)
}

fn load_source(src: &SourceArgs, seed: Option<u64>) -> Result<Session, CliError> {
    if let Some(dir) = &src.input {
        Ok(load_ultrasuite_session(dir)?)
    } else if let Some(path) = &src.manifest {
        Ok(load_manifest_session(path)?)
    } else if let Some(path) = &src.spec {
        Ok(generate_synthetic_session(&read_spec(path, seed)?)?)
    } else {
        Err(CliError::Usage("one of --input, --manifest or --spec is required".into()))
    }
}

/// Loads a speaker directory: its `manifest.json` when present, otherwise
/// UltraSuite files.
fn load_speaker_dir(dir: &Path) -> Result<Session, IngestError> {
    let manifest = dir.join("manifest.json");
    if manifest.is_file() {
        load_manifest_session(&manifest)
    } else {
        load_ultrasuite_session(dir)
    }
}

fn analyze_into(
    session: &Session,
    config: &AnalysisConfig,
    out_dir: Option<&Path>,
) -> Result<Vec<MetricStats>, CliError> {
    if let Some(dir) = out_dir {
        if config.emit.any() {
            fs::create_dir_all(dir).map_err(|e| RenderError::Io {
                path: dir.to_path_buf(),
                source: e,
            })?;
        }
    }
    let report = analyze_session(session, config, out_dir)?;
    Ok(report.metrics.iter().filter_map(|m| m.stats).collect())
}

fn cmd_analyze(a: &AnalyzeArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let config = build_config(&a.common)?;
    let session = load_source(&a.source, a.seed)?;
    let stats = analyze_into(&session, &config, a.common.out.as_deref())?;
    for s in &stats {
        let _ = writeln!(out, "{}", s.summary_line());
    }
    Ok(())
}

fn cmd_synth(a: &SynthArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let session = generate_synthetic_session(&read_spec(&a.spec, a.seed)?)?;
    let path = write_manifest_session(&session, &a.out)?;
    let _ = writeln!(out, "{}", path.display());
    Ok(())
}

fn cmd_batch(a: &BatchArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let fail = |err: &mut dyn Write, e: CliError| {
        let _ = writeln!(err, "error: {e}");
        e.exit_code()
    };
    let config = match build_config(&a.common) {
        Ok(c) => c,
        Err(e) => return fail(err, e),
    };
    let mut dirs: Vec<PathBuf> = match fs::read_dir(&a.input) {
        Ok(rd) => rd
            .filter_map(Result::ok)
            .map(|d| d.path())
            .filter(|p| p.is_dir())
            .collect(),
        Err(e) => {
            return fail(
                err,
                IngestError::Io {
                    path: a.input.clone(),
                    source: e,
                }
                .into(),
            )
        }
    };
    dirs.sort();
    if dirs.is_empty() {
        return fail(err, IngestError::NoUtterances(a.input.clone()).into());
    }

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for dir in &dirs {
        let name = dir.file_name().unwrap_or_default().to_string_lossy().into_owned();
        let speaker_out = a.common.out.as_ref().map(|o| o.join(&name));
        let result = load_speaker_dir(dir)
            .map_err(CliError::from)
            .and_then(|s| analyze_into(&s, &config, speaker_out.as_deref()));
        match result {
            Ok(stats) => rows.push((name, stats)),
            Err(e) => {
                let _ = writeln!(err, "error: {name}: {e}");
                failures.push((name, e));
            }
        }
    }

    let table = stats_table(&config.metrics, &rows);
    let _ = write!(out, "{table}");
    if let Some(dir) = &a.common.out {
        if let Err(e) = write_batch_summary(dir, &config.metrics, &rows, &table) {
            return fail(err, e);
        }
    }
    if failures.is_empty() {
        EXIT_OK
    } else {
        let _ = writeln!(err, "{} of {} speakers failed:", failures.len(), dirs.len());
        for (name, e) in &failures {
            let _ = writeln!(err, "  {name}: {e}");
        }
        EXIT_BATCH
    }
}

fn write_batch_summary(
    dir: &Path,
    metrics: &[MetricKind],
    rows: &[(String, Vec<MetricStats>)],
    table: &str,
) -> Result<(), CliError> {
    let io = |p: &Path| {
        let p = p.to_path_buf();
        move |e| RenderError::Io { path: p, source: e }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let txt = dir.join("batch_summary.txt");
    fs::write(&txt, table).map_err(io(&txt))?;

    let path = dir.join("batch_summary.csv");
    let csv_err = |e: csv::Error| RenderError::Format {
        path: path.clone(),
        reason: e.to_string(),
    };
    let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
    w.write_record(["speaker", "metric", "mean", "std", "pairs"]).map_err(csv_err)?;
    for (name, stats) in rows {
        for k in metrics {
            if let Some(s) = stats.iter().find(|s| s.metric == *k) {
                w.write_record([
                    name.clone(),
                    k.name().to_string(),
                    s.mean.to_string(),
                    s.std.to_string(),
                    s.pairs.to_string(),
                ])
                .map_err(csv_err)?;
            }
        }
    }
    w.flush().map_err(io(&path))?;
    Ok(())
}
