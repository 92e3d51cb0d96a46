//! Transformation-aware target feature pool and max-over-pool candidate
//! scoring.

use std::cmp::Ordering;

use thiserror::Error;

use crate::backends::{BackendError, Candidate, Embedder, EmbeddingVector, ObjectKey, POOL_FRAME};
use crate::maskmedia::{d4_apply, masked_crop, resize_patch, BinaryMask, CropParams, D4Transform, FrameImage, MaskError, Patch};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum PoolError {
    #[error("embedding dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("transform set must contain identity")]
    MissingIdentity,
    #[error("candidate in frame {frame} but the video has {num_frames} frames")]
    FrameOutOfRange { frame: usize, num_frames: usize },
    #[error(transparent)]
    Mask(#[from] MaskError),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

/// Cosine similarity of two unit vectors, clamped to `[-1, 1]`.
pub fn cosine<T: Scalar>(u: &EmbeddingVector<T>, v: &EmbeddingVector<T>) -> Result<T, PoolError> {
    if u.dim() != v.dim() {
        return Err(PoolError::DimensionMismatch(u.dim(), v.dim()));
    }
    let dot = u
        .values()
        .iter()
        .zip(v.values())
        .fold(T::zero(), |acc, (&a, &b)| acc + a * b);
    Ok(dot.max(-T::one()).min(T::one()))
}

/// Crop, mean-fill and resize an object into the embedder's input patch.
pub fn object_patch(frame: &FrameImage, mask: &BinaryMask, crop: CropParams) -> Result<Patch, MaskError> {
    resize_patch(&masked_crop(frame, mask, crop.pad_ratio)?, crop.patch_side)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoolEntry<T> {
    pub transform: D4Transform,
    pub vector: EmbeddingVector<T>,
}

/// Embeddings of the first-frame target under a set of D4 transforms, in
/// canonical transform order.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetFeaturePool<T> {
    pub entries: Vec<PoolEntry<T>>,
    pub source_frame: usize,
    pub patch_side: u32,
}

/// Best pool match for one vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoolMatch<T> {
    pub score: T,
    pub best_transform: D4Transform,
}

/// Candidate with its pool score.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchScore<T> {
    pub candidate: Candidate,
    pub score: T,
    pub best_transform: D4Transform,
}

/// Canonical, de-duplicated transform list; identity is mandatory.
pub fn normalize_transforms(transforms: &[D4Transform]) -> Result<Vec<D4Transform>, PoolError> {
    let mut ts = transforms.to_vec();
    ts.sort();
    ts.dedup();
    if ts.first() != Some(&D4Transform::Identity) {
        return Err(PoolError::MissingIdentity);
    }
    Ok(ts)
}

/// Builds the pool from the target's crop in `first_frame`.
///
/// The crop is resized before each transform is applied, so every variant is
/// an exact pixel permutation of the same patch. Replay embedders are queried
/// with key `(-1, transform name)`.
pub fn build_pool<T: Scalar, E: Embedder<T> + ?Sized>(
    first_frame: &FrameImage,
    target_mask: &BinaryMask,
    embedder: &E,
    transforms: &[D4Transform],
    crop: CropParams,
) -> Result<TargetFeaturePool<T>, PoolError> {
    let transforms = normalize_transforms(transforms)?;
    let base = object_patch(first_frame, target_mask, crop)?;
    let mut entries = Vec::with_capacity(transforms.len());
    for t in transforms {
        let view = d4_apply(&base, t);
        let vector = embedder.embed(ObjectKey::new(POOL_FRAME, t.name()), &view)?;
        if let Some(first) = entries.first() {
            let first: &PoolEntry<T> = first;
            if first.vector.dim() != vector.dim() {
                return Err(PoolError::DimensionMismatch(first.vector.dim(), vector.dim()));
            }
        }
        entries.push(PoolEntry { transform: t, vector });
    }
    Ok(TargetFeaturePool {
        entries,
        source_frame: 0,
        patch_side: crop.patch_side,
    })
}

impl<T: Scalar> TargetFeaturePool<T> {
    pub fn dim(&self) -> usize {
        self.entries.first().map_or(0, |e| e.vector.dim())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Maximum cosine over the pool; ties go to the earliest entry.
pub fn score_candidate<T: Scalar>(
    vector: &EmbeddingVector<T>,
    pool: &TargetFeaturePool<T>,
) -> Result<PoolMatch<T>, PoolError> {
    let mut best: Option<PoolMatch<T>> = None;
    for entry in &pool.entries {
        let s = cosine(vector, &entry.vector)?;
        if best.is_none_or(|b| s > b.score) {
            best = Some(PoolMatch {
                score: s,
                best_transform: entry.transform,
            });
        }
    }
    best.ok_or(PoolError::MissingIdentity)
}

/// Score order: descending score, then ascending frame, then ascending id.
pub fn score_order<T: Scalar>(a: &MatchScore<T>, b: &MatchScore<T>) -> Ordering {
    b.score
        .partial_cmp(&a.score)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.candidate.frame_idx.cmp(&b.candidate.frame_idx))
        .then_with(|| a.candidate.instance_id.cmp(&b.candidate.instance_id))
}

/// Output of [`score_all`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredCandidates<T> {
    /// Sorted by [`score_order`].
    pub scores: Vec<MatchScore<T>>,
    /// Candidates skipped because their mask decoded empty.
    pub warnings: Vec<String>,
}

/// Embeds every candidate's own (untransformed) crop and scores it against
/// the pool.
pub fn score_all<T: Scalar, E: Embedder<T> + ?Sized>(
    frames: &[FrameImage],
    candidates: &[Vec<Candidate>],
    pool: &TargetFeaturePool<T>,
    embedder: &E,
    crop: CropParams,
) -> Result<ScoredCandidates<T>, PoolError> {
    let mut scores = Vec::new();
    let mut warnings = Vec::new();
    for cand in candidates.iter().flatten() {
        let frame = frames.get(cand.frame_idx).ok_or(PoolError::FrameOutOfRange {
            frame: cand.frame_idx,
            num_frames: frames.len(),
        })?;
        let mask = cand.decode_mask()?;
        let patch = match object_patch(frame, &mask, crop) {
            Ok(p) => p,
            Err(MaskError::EmptyMask) => {
                warnings.push(format!(
                    "skipped candidate {:?} in frame {}: empty mask",
                    cand.instance_id, cand.frame_idx
                ));
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let v = embedder.embed(ObjectKey::new(cand.frame_idx as i64, &cand.instance_id), &patch)?;
        let m = score_candidate(&v, pool)?;
        scores.push(MatchScore {
            candidate: cand.clone(),
            score: m.score,
            best_transform: m.best_transform,
        });
    }
    scores.sort_by(score_order);
    Ok(ScoredCandidates { scores, warnings })
}
