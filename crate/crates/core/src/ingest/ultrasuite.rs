//! UltraSuite-style raw scanline recordings.
//!
//! Each utterance is a `<name>.ult` file of unsigned 8-bit samples, frame after
//! frame, with a sidecar `<name>.param` of `Key=Value` lines. When every
//! utterance also has a `<name>.txt` prompt file whose second line is a
//! recording date, utterances are timed relative to the earliest one;
//! otherwise they get ordinals in filename order.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDateTime;
use rayon::prelude::*;

use super::{split_frames, IngestError, Session, Utterance};

#[derive(Debug, Clone, PartialEq)]
pub struct UltParams {
    pub num_vectors: usize,
    pub pix_per_vector: usize,
    pub frames_per_sec: Option<f64>,
    pub time_of_first_frame: Option<f64>,
}

fn parse_count(path: &Path, key: &str, value: &str) -> Result<usize, IngestError> {
    let bad = || IngestError::BadParams {
        path: path.to_path_buf(),
        reason: format!("{key}={value} is not a positive integer"),
    };
    let n = match value.parse::<usize>() {
        Ok(n) => n,
        Err(_) => {
            let f: f64 = value.parse().map_err(|_| bad())?;
            if f.fract() != 0.0 || f < 0.0 || !f.is_finite() {
                return Err(bad());
            }
            f as usize
        }
    };
    if n == 0 {
        return Err(bad());
    }
    Ok(n)
}

fn parse_real(path: &Path, key: &str, value: &str) -> Result<f64, IngestError> {
    value
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| IngestError::BadParams {
            path: path.to_path_buf(),
            reason: format!("{key}={value} is not a finite number"),
        })
}

/// Parses the text of a `.param` file. Unknown keys are ignored.
pub fn parse_param_file(path: &Path, text: &str) -> Result<UltParams, IngestError> {
    let mut kv = HashMap::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some((k, v)) = line.split_once('=') {
            kv.insert(k.trim().to_string(), v.trim().to_string());
        }
    }
    let required = |key: &str| {
        kv.get(key).ok_or_else(|| IngestError::BadParams {
            path: path.to_path_buf(),
            reason: format!("missing required key {key}"),
        })
    };
    let num_vectors = parse_count(path, "NumVectors", required("NumVectors")?)?;
    let pix_per_vector = parse_count(path, "PixPerVector", required("PixPerVector")?)?;
    let frames_per_sec = kv
        .get("FramesPerSec")
        .map(|v| parse_real(path, "FramesPerSec", v))
        .transpose()?;
    let time_of_first_frame = kv
        .get("TimeInSecsOfFirstFrame")
        .map(|v| parse_real(path, "TimeInSecsOfFirstFrame", v))
        .transpose()?;
    Ok(UltParams {
        num_vectors,
        pix_per_vector,
        frames_per_sec,
        time_of_first_frame,
    })
}

const DATE_FORMATS: &[&str] = &[
    "%d/%m/%Y %H:%M:%S",
    "%Y-%m-%d %H:%M:%S",
    "%Y-%m-%dT%H:%M:%S",
];

/// Recording date from the second line of an UltraSuite prompt file.
fn prompt_date(ult_path: &Path) -> Option<NaiveDateTime> {
    let text = fs::read_to_string(ult_path.with_extension("txt")).ok()?;
    let line = text.lines().nth(1)?.trim();
    DATE_FORMATS
        .iter()
        .find_map(|fmt| NaiveDateTime::parse_from_str(line, fmt).ok())
}

struct Loaded {
    id: String,
    date: Option<NaiveDateTime>,
    frames: Vec<super::Frame>,
    frame_rate: Option<f64>,
}

fn load_one(ult_path: &Path) -> Result<Loaded, IngestError> {
    let param_path = ult_path.with_extension("param");
    let text = fs::read_to_string(&param_path).map_err(|e| IngestError::io(&param_path, e))?;
    let params = parse_param_file(&param_path, &text)?;
    let bytes = fs::read(ult_path).map_err(|e| IngestError::io(ult_path, e))?;
    let frames = split_frames(ult_path, bytes, params.pix_per_vector, params.num_vectors)?;
    let id = ult_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(Loaded {
        id,
        date: prompt_date(ult_path),
        frames,
        frame_rate: params.frames_per_sec,
    })
}

/// Loads every `.ult` file in `dir` as one utterance of a session whose
/// speaker id is the directory name.
pub fn load_ultrasuite_session(dir: &Path) -> Result<Session, IngestError> {
    let entries = fs::read_dir(dir).map_err(|e| IngestError::io(dir, e))?;
    let mut ult_paths: Vec<PathBuf> = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| IngestError::io(dir, e))?.path();
        if path.is_file() && path.extension().is_some_and(|ext| ext == "ult") {
            ult_paths.push(path);
        }
    }
    if ult_paths.is_empty() {
        return Err(IngestError::NoUtterances(dir.to_path_buf()));
    }
    ult_paths.sort();

    let loaded: Vec<Loaded> = ult_paths
        .par_iter()
        .map(|p| load_one(p))
        .collect::<Result<_, _>>()?;

    let dated = loaded.iter().all(|l| l.date.is_some());
    let origin = loaded.iter().filter_map(|l| l.date).min();
    let utterances = loaded
        .into_iter()
        .enumerate()
        .map(|(ordinal, l)| {
            let timestamp = match (dated, l.date, origin) {
                (true, Some(d), Some(o)) => (d - o).num_milliseconds() as f64 / 1000.0,
                _ => ordinal as f64,
            };
            Utterance::new(l.id, timestamp, l.frames, l.frame_rate)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let speaker = dir
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Session::new(speaker.clone(), speaker, utterances)
}
