//! Detector and embedder interfaces, with replay backends for exported
//! model outputs and deterministic stand-ins for desk-scale runs.

mod detector;
mod embedder;
mod embedding;

use std::io::BufRead;
use std::path::Path;

use thiserror::Error;

use crate::maskmedia::MaskError;

pub use detector::{detect_video, Candidate, DetectionRecord, Detector, FileDetector, JitterParams, OracleDetector};
pub use embedder::{patch_embed, Embedder, EmbeddingRecord, FileEmbedder, ObjectKey, PatchEmbedder, POOL_FRAME};
pub use embedding::EmbeddingVector;

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {source}")]
    Record { line: usize, source: MaskError },
    #[error("no embedding for frame {frame}, id {id:?}")]
    MissingEmbedding { frame: i64, id: String },
    #[error("frame {frame}: candidate mask is {actual:?}, frame is {expected:?}")]
    FrameSize {
        frame: usize,
        expected: (u32, u32),
        actual: (u32, u32),
    },
    #[error("embedding vector is empty, zero or non-finite")]
    DegenerateVector,
    #[error("{0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Mask(#[from] MaskError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl BackendError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        BackendError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// Non-blank lines with 1-based line numbers.
fn read_lines(reader: impl BufRead) -> impl Iterator<Item = Result<(usize, String), BackendError>> {
    reader.lines().enumerate().filter_map(|(i, line)| match line {
        Ok(text) if text.trim().is_empty() => None,
        Ok(text) => Some(Ok((i + 1, text))),
        Err(e) => Some(Err(BackendError::Parse {
            line: i + 1,
            message: e.to_string(),
        })),
    })
}
