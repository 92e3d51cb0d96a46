use std::collections::HashMap;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_lines, BackendError, EmbeddingVector};
use crate::maskmedia::Patch;
use crate::scalar::Scalar;

/// Frame index reserved for first-frame target pool entries in embedding
/// exports. The instance id of such a record is the transform name.
pub const POOL_FRAME: i64 = -1;

/// Identifies the object a patch was cut from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ObjectKey<'a> {
    pub frame_idx: i64,
    pub instance_id: &'a str,
}

impl<'a> ObjectKey<'a> {
    pub fn new(frame_idx: i64, instance_id: &'a str) -> Self {
        Self {
            frame_idx,
            instance_id,
        }
    }
}

/// Source of object-level features.
///
/// Computing backends read the patch; replay backends read the key.
/// Implementations must be deterministic.
pub trait Embedder<T: Scalar> {
    fn embed(&self, key: ObjectKey<'_>, patch: &Patch) -> Result<EmbeddingVector<T>, BackendError>;
}

impl<T: Scalar, E: Embedder<T> + ?Sized> Embedder<T> for &E {
    fn embed(&self, key: ObjectKey<'_>, patch: &Patch) -> Result<EmbeddingVector<T>, BackendError> {
        (**self).embed(key, patch)
    }
}

impl<T: Scalar, E: Embedder<T> + ?Sized> Embedder<T> for Box<E> {
    fn embed(&self, key: ObjectKey<'_>, patch: &Patch) -> Result<EmbeddingVector<T>, BackendError> {
        (**self).embed(key, patch)
    }
}

/// Mean-centred raw-pixel descriptor.
///
/// A pure function of the pixel multiset per position, so any pixel
/// permutation of the patch permutes the output entries the same way.
#[derive(Debug, Clone, Copy, Default)]
pub struct PatchEmbedder;

impl<T: Scalar> Embedder<T> for PatchEmbedder {
    fn embed(&self, _key: ObjectKey<'_>, patch: &Patch) -> Result<EmbeddingVector<T>, BackendError> {
        Ok(patch_embed(patch))
    }
}

/// Flattens the patch to `3·side²` values (pixel-major, RGB interleaved),
/// subtracts the per-channel mean and normalizes to unit length.
///
/// Channel sums and the squared norm are accumulated in integers, so the mean
/// and norm are bit-identical for any permutation of the pixels. A patch with
/// zero variance maps to the first basis vector.
pub fn patch_embed<T: Scalar>(patch: &Patch) -> EmbeddingVector<T> {
    let px = patch.pixels();
    let n = (patch.side() as u128) * (patch.side() as u128);
    let mut s1 = [0u128; 3];
    let mut s2 = [0u128; 3];
    for chunk in px.chunks_exact(3) {
        for k in 0..3 {
            let v = chunk[k] as u128;
            s1[k] += v;
            s2[k] += v * v;
        }
    }
    // n * Σ(v - mean)² per channel, summed
    let scaled: u128 = (0..3).map(|k| n * s2[k] - s1[k] * s1[k]).sum();
    if scaled == 0 {
        return EmbeddingVector::basis(px.len());
    }
    let nt = T::from_u128(n).expect("pixel count fits");
    let norm = (T::from_u128(scaled).expect("sum fits") / nt).sqrt();
    let mean = s1.map(|s| T::from_u128(s).expect("sum fits") / nt);
    let values = px
        .chunks_exact(3)
        .flat_map(|chunk| (0..3).map(move |k| (T::count(chunk[k] as usize) - mean[k]) / norm))
        .collect();
    EmbeddingVector::from_unit(values)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingRecord {
    pub frame: i64,
    pub id: String,
    pub vec: Vec<f64>,
}

/// Replays embeddings exported by an external feature extractor.
#[derive(Debug, Clone, Default)]
pub struct FileEmbedder {
    table: HashMap<(i64, String), Vec<f64>>,
    dim: Option<usize>,
}

impl FileEmbedder {
    /// Loads a JSON Lines file of [`EmbeddingRecord`]s. Later records with a
    /// duplicate `(frame, id)` replace earlier ones.
    pub fn load(path: &Path) -> Result<Self, BackendError> {
        let file = std::fs::File::open(path).map_err(|e| BackendError::io(path, e))?;
        Self::from_reader(std::io::BufReader::new(file))
    }

    pub fn from_reader(reader: impl BufRead) -> Result<Self, BackendError> {
        let mut out = FileEmbedder::default();
        for item in read_lines(reader) {
            let (line_no, line) = item?;
            let rec: EmbeddingRecord = serde_json::from_str(&line).map_err(|e| BackendError::Parse {
                line: line_no,
                message: e.to_string(),
            })?;
            out.insert(line_no, rec)?;
        }
        Ok(out)
    }

    fn insert(&mut self, line: usize, rec: EmbeddingRecord) -> Result<(), BackendError> {
        let parse_err = |message: String| BackendError::Parse { line, message };
        if rec.frame < POOL_FRAME {
            return Err(parse_err(format!("frame {} is below -1", rec.frame)));
        }
        if rec.vec.is_empty() || rec.vec.iter().any(|v| !v.is_finite()) {
            return Err(parse_err("vec must be non-empty and finite".into()));
        }
        if rec.vec.iter().all(|&v| v == 0.0) {
            return Err(parse_err("vec is all zeros".into()));
        }
        match self.dim {
            Some(d) if d != rec.vec.len() => {
                return Err(parse_err(format!("vec has dimension {}, expected {d}", rec.vec.len())))
            }
            _ => self.dim = Some(rec.vec.len()),
        }
        self.table.insert((rec.frame, rec.id), rec.vec);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.dim
    }

    pub fn lookup<T: Scalar>(&self, frame_idx: i64, instance_id: &str) -> Result<EmbeddingVector<T>, BackendError> {
        let raw = self
            .table
            .get(&(frame_idx, instance_id.to_string()))
            .ok_or_else(|| BackendError::MissingEmbedding {
                frame: frame_idx,
                id: instance_id.to_string(),
            })?;
        EmbeddingVector::from_raw(raw.iter().map(|&v| T::lit(v)).collect())
    }
}

impl<T: Scalar> Embedder<T> for FileEmbedder {
    fn embed(&self, key: ObjectKey<'_>, _patch: &Patch) -> Result<EmbeddingVector<T>, BackendError> {
        self.lookup(key.frame_idx, key.instance_id)
    }
}
