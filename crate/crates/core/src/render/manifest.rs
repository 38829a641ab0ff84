use std::fs;
use std::path::{Path, PathBuf};

use super::RenderError;
use crate::ingest::{Manifest, ManifestEntry, Session};

/// Writes `session` as `manifest.json` plus one `<id>.raw` frame file per
/// utterance in `dir`, loadable again with
/// [`load_manifest_session`](crate::ingest::load_manifest_session).
pub fn write_manifest_session(session: &Session, dir: &Path) -> Result<PathBuf, RenderError> {
    fs::create_dir_all(dir).map_err(|e| RenderError::io(dir, e))?;
    let mut entries = Vec::with_capacity(session.len());
    for u in session.utterances() {
        let file = format!("{}.raw", u.id());
        let bytes: Vec<u8> = u.frames().iter().flat_map(|f| f.pixels().iter().copied()).collect();
        let path = dir.join(&file);
        fs::write(&path, bytes).map_err(|e| RenderError::io(&path, e))?;
        let (width, height) = u.dims();
        entries.push(ManifestEntry {
            id: u.id().to_string(),
            timestamp: Some(u.timestamp()),
            file,
            width,
            height,
            frame_rate: u.frame_rate(),
        });
    }
    let manifest = Manifest {
        speaker_id: session.speaker_id().to_string(),
        session_id: session.session_id().to_string(),
        utterances: entries,
    };
    let path = dir.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| RenderError::Format {
        path: path.clone(),
        reason: e.to_string(),
    })?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| RenderError::io(&path, e))?;
    Ok(path)
}
