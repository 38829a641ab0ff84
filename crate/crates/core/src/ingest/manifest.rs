//! JSON manifest sessions.
//!
//! ```json
//! {
//!   "speaker_id": "0160",
//!   "session_id": "2018.01",
//!   "utterances": [
//!     {"id": "u001", "timestamp": 0.0, "file": "u001.raw", "width": 842, "height": 64}
//!   ]
//! }
//! ```
//!
//! `file` is resolved relative to the manifest and holds raw 8-bit frames of
//! `height` rows by `width` columns, back to back. An optional `frame_rate`
//! may accompany each entry.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{split_frames, IngestError, Session, Utterance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub speaker_id: String,
    pub session_id: String,
    pub utterances: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub id: String,
    #[serde(default)]
    pub timestamp: Option<f64>,
    pub file: String,
    pub width: usize,
    pub height: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame_rate: Option<f64>,
}

pub fn load_manifest_session(manifest_path: &Path) -> Result<Session, IngestError> {
    let text =
        fs::read_to_string(manifest_path).map_err(|e| IngestError::io(manifest_path, e))?;
    let schema = |reason: String| IngestError::Schema {
        path: manifest_path.to_path_buf(),
        reason,
    };
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| schema(e.to_string()))?;
    if manifest.utterances.is_empty() {
        return Err(IngestError::EmptySession(manifest_path.to_path_buf()));
    }
    for (k, e) in manifest.utterances.iter().enumerate() {
        if e.width == 0 || e.height == 0 {
            return Err(schema(format!(
                "utterances[{k}] ({}): width and height must be positive",
                e.id
            )));
        }
    }

    let dated = manifest.utterances.iter().filter(|e| e.timestamp.is_some()).count();
    if dated != 0 && dated != manifest.utterances.len() {
        return Err(schema(
            "timestamp must be given for all utterances or for none".into(),
        ));
    }
    // ordinals follow file-name order when no timestamps are given
    let mut by_file: Vec<usize> = (0..manifest.utterances.len()).collect();
    by_file.sort_by(|&a, &b| manifest.utterances[a].file.cmp(&manifest.utterances[b].file));
    let mut ordinal = vec![0usize; by_file.len()];
    for (rank, &idx) in by_file.iter().enumerate() {
        ordinal[idx] = rank;
    }

    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let utterances = manifest
        .utterances
        .par_iter()
        .zip(ordinal.par_iter())
        .map(|(entry, &ord)| {
            let path = base.join(&entry.file);
            let bytes = fs::read(&path).map_err(|e| IngestError::io(&path, e))?;
            let frames = split_frames(&path, bytes, entry.width, entry.height)?;
            let timestamp = entry.timestamp.unwrap_or(ord as f64);
            Utterance::new(entry.id.clone(), timestamp, frames, entry.frame_rate)
        })
        .collect::<Result<Vec<_>, _>>()?;

    Session::new(manifest.speaker_id, manifest.session_id, utterances)
}
