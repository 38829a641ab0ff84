//! Recording-session ingestion.
//!
//! A [`Session`] is an ordered list of [`Utterance`]s, each holding the raw
//! scanline frames recorded for one prompt. Sessions come from UltraSuite-style
//! `.ult`/`.param` pairs, from a JSON manifest, or from the synthetic generator
//! used to exercise misalignment detection with known ground truth.

mod manifest;
mod synthetic;
mod ultrasuite;

use std::cmp::Ordering;
use std::path::PathBuf;

use thiserror::Error;

pub use manifest::{load_manifest_session, Manifest, ManifestEntry};
pub use synthetic::{band_limited_texture, generate_synthetic_session, ShiftBoundary, SyntheticSpec};
pub use ultrasuite::{load_ultrasuite_session, parse_param_file, UltParams};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("no utterances found in {0}")]
    NoUtterances(PathBuf),
    #[error("empty session: {0} lists no utterances")]
    EmptySession(PathBuf),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: invalid parameter file: {reason}")]
    BadParams { path: PathBuf, reason: String },
    #[error("{path}: byte stream of {len} bytes is not a multiple of the frame size {frame_size} (remainder {remainder})")]
    TrailingBytes {
        path: PathBuf,
        len: usize,
        frame_size: usize,
        remainder: usize,
    },
    #[error("{path}: manifest schema violation: {reason}")]
    Schema { path: PathBuf, reason: String },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid frame: {0}")]
    InvalidFrame(String),
    #[error("invalid utterance {id}: {reason}")]
    InvalidUtterance { id: String, reason: String },
    #[error("invalid synthetic spec: {field}: {reason}")]
    InvalidSpec { field: String, reason: String },
}

impl IngestError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        IngestError::Io {
            path: path.into(),
            source,
        }
    }
}

/// One grayscale scanline image: `height` beam vectors of `width` samples each,
/// stored row-major (vector-major).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl Frame {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, IngestError> {
        if width == 0 || height == 0 {
            return Err(IngestError::InvalidFrame(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(IngestError::InvalidFrame(format!(
                "expected {} pixels for {width}x{height}, got {}",
                width * height,
                pixels.len()
            )));
        }
        Ok(Frame {
            width,
            height,
            pixels,
        })
    }

    /// Pixels per scanline vector.
    pub fn width(&self) -> usize {
        self.width
    }

    /// Number of scanline vectors.
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }
}

/// All frames recorded for one prompt, silences included.
#[derive(Debug, Clone, PartialEq)]
pub struct Utterance {
    id: String,
    timestamp: f64,
    frames: Vec<Frame>,
    frame_rate: Option<f64>,
}

impl Utterance {
    pub fn new(
        id: impl Into<String>,
        timestamp: f64,
        frames: Vec<Frame>,
        frame_rate: Option<f64>,
    ) -> Result<Self, IngestError> {
        let id = id.into();
        let invalid = |reason: String| IngestError::InvalidUtterance {
            id: id.clone(),
            reason,
        };
        if !timestamp.is_finite() {
            return Err(invalid(format!("timestamp {timestamp} is not finite")));
        }
        let Some(first) = frames.first() else {
            return Err(invalid("no frames".into()));
        };
        let dims = first.dims();
        if let Some((k, f)) = frames.iter().enumerate().find(|(_, f)| f.dims() != dims) {
            return Err(invalid(format!(
                "frame {k} is {}x{}, expected {}x{}",
                f.width, f.height, dims.0, dims.1
            )));
        }
        Ok(Utterance {
            id,
            timestamp,
            frames,
            frame_rate,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    /// Seconds since session start, or an ordinal when no clock time is known.
    pub fn timestamp(&self) -> f64 {
        self.timestamp
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn frame_rate(&self) -> Option<f64> {
        self.frame_rate
    }

    /// `(width, height)` shared by every frame.
    pub fn dims(&self) -> (usize, usize) {
        self.frames[0].dims()
    }
}

/// Orders by timestamp, then lexicographically by id.
pub(crate) fn utterance_order(a: &Utterance, b: &Utterance) -> Ordering {
    a.timestamp
        .total_cmp(&b.timestamp)
        .then_with(|| a.id.cmp(&b.id))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    speaker_id: String,
    session_id: String,
    utterances: Vec<Utterance>,
}

impl Session {
    /// Builds a session, sorting utterances by timestamp (ties broken by id).
    ///
    /// Every utterance must share the frame dimensions of the first one; the
    /// error lists each offending utterance.
    pub fn new(
        speaker_id: impl Into<String>,
        session_id: impl Into<String>,
        mut utterances: Vec<Utterance>,
    ) -> Result<Self, IngestError> {
        check_uniform_dims(&utterances)?;
        utterances.sort_by(utterance_order);
        Ok(Session {
            speaker_id: speaker_id.into(),
            session_id: session_id.into(),
            utterances,
        })
    }

    /// Builds a session without the shared-dimension check. Analysis reports
    /// mismatches itself, so this exists for callers that want that report.
    pub fn new_unchecked(
        speaker_id: impl Into<String>,
        session_id: impl Into<String>,
        mut utterances: Vec<Utterance>,
    ) -> Self {
        utterances.sort_by(utterance_order);
        Session {
            speaker_id: speaker_id.into(),
            session_id: session_id.into(),
            utterances,
        }
    }

    pub fn speaker_id(&self) -> &str {
        &self.speaker_id
    }

    pub fn session_id(&self) -> &str {
        &self.session_id
    }

    pub fn utterances(&self) -> &[Utterance] {
        &self.utterances
    }

    pub fn len(&self) -> usize {
        self.utterances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.utterances.is_empty()
    }
}

/// Returns an error naming every utterance whose frame size differs from the
/// first utterance's.
pub fn check_uniform_dims(utterances: &[Utterance]) -> Result<(), IngestError> {
    let Some(first) = utterances.first() else {
        return Ok(());
    };
    let (w, h) = first.dims();
    let offenders: Vec<String> = utterances
        .iter()
        .filter(|u| u.dims() != (w, h))
        .map(|u| {
            let (uw, uh) = u.dims();
            format!("{} ({uw}x{uh})", u.id)
        })
        .collect();
    if offenders.is_empty() {
        Ok(())
    } else {
        Err(IngestError::DimensionMismatch(format!(
            "expected {w}x{h} (from {}), offending utterances: {}",
            first.id,
            offenders.join(", ")
        )))
    }
}

/// Splits a raw byte stream into frames of `width` x `height` bytes.
pub(crate) fn split_frames(
    path: &std::path::Path,
    bytes: Vec<u8>,
    width: usize,
    height: usize,
) -> Result<Vec<Frame>, IngestError> {
    let frame_size = width * height;
    let remainder = bytes.len() % frame_size;
    if remainder != 0 {
        return Err(IngestError::TrailingBytes {
            path: path.to_path_buf(),
            len: bytes.len(),
            frame_size,
            remainder,
        });
    }
    if bytes.is_empty() {
        return Err(IngestError::InvalidFrame(format!(
            "{}: contains no frames",
            path.display()
        )));
    }
    bytes
        .chunks_exact(frame_size)
        .map(|chunk| Frame::new(width, height, chunk.to_vec()))
        .collect()
}
