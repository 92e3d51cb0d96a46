//! Reference multi-anchor tracker: anchors become permanent memory, every
//! other frame is segmented by associating detector candidates with memory.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::anchors::{PromptSchedule, AnchorSource};
use crate::backends::{BackendError, Detector, Embedder, EmbeddingVector, ObjectKey, POOL_FRAME};
use crate::featurepool::{cosine, object_patch, PoolError};
use crate::maskmedia::{rle_decode, rle_encode, BinaryMask, CropParams, FrameImage, MaskError, RleMask};
use crate::scalar::Scalar;

/// Instance id used to look up a mined anchor with no recorded instance in a
/// replayed embedding file.
pub const ANCHOR_ID: &str = "anchor";

#[derive(Debug, Error)]
pub enum TrackError {
    #[error("video has no frames")]
    NoFrames,
    #[error("anchor at frame {frame} but the video has {num_frames} frames")]
    AnchorOutOfRange { frame: usize, num_frames: usize },
    #[error("anchor mask at frame {frame} is {actual:?}, frames are {expected:?}")]
    AnchorSize {
        frame: usize,
        expected: (u32, u32),
        actual: (u32, u32),
    },
    #[error("invalid tracker parameters: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Mask(#[from] MaskError),
    #[error(transparent)]
    Pool(#[from] PoolError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackerParams<T> {
    /// Minimum memory similarity for a candidate to be emitted.
    pub tau_track: T,
    /// Minimum similarity for an emitted candidate to enter rolling memory.
    pub tau_mem: T,
    /// Rolling memory capacity.
    pub mem_capacity: usize,
    pub crop: CropParams,
}

impl<T: Scalar> Default for TrackerParams<T> {
    fn default() -> Self {
        Self {
            tau_track: T::lit(0.6),
            tau_mem: T::lit(0.8),
            mem_capacity: 4,
            crop: CropParams::default(),
        }
    }
}

impl<T: Scalar> TrackerParams<T> {
    pub fn validate(&self) -> Result<(), TrackError> {
        if !self.tau_track.is_finite() || !self.tau_mem.is_finite() {
            return Err(TrackError::InvalidParameter("thresholds must be finite".into()));
        }
        if self.tau_mem < self.tau_track {
            return Err(TrackError::InvalidParameter(format!(
                "tau_mem ({}) must be at least tau_track ({})",
                self.tau_mem, self.tau_track
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemoryKind {
    Anchor,
    Rolling,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemoryEntry<T> {
    pub frame_idx: usize,
    pub embedding: EmbeddingVector<T>,
    pub mask: RleMask,
    pub kind: MemoryKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameTag {
    Anchor,
    Matched,
    Absent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameTrack<T> {
    pub mask: RleMask,
    /// Anchor score on anchor frames, otherwise the best candidate's memory
    /// similarity (`None` when there were no candidates).
    pub score: Option<T>,
    pub tag: FrameTag,
    pub instance_id: Option<String>,
    /// Rolling memory size after this frame.
    pub rolling_len: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackResult<T> {
    pub frames: Vec<FrameTrack<T>>,
}

impl<T: Scalar> TrackResult<T> {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn masks(&self) -> Result<Vec<BinaryMask>, MaskError> {
        self.frames.iter().map(|f| rle_decode(&f.mask)).collect()
    }
}

/// Anchor memory plus a FIFO of confident recent matches.
#[derive(Debug, Clone)]
pub struct Memory<T> {
    anchors: Vec<MemoryEntry<T>>,
    rolling: VecDeque<MemoryEntry<T>>,
    capacity: usize,
}

impl<T: Scalar> Memory<T> {
    pub fn new(anchors: Vec<MemoryEntry<T>>, capacity: usize) -> Self {
        Self {
            anchors,
            rolling: VecDeque::with_capacity(capacity),
            capacity,
        }
    }

    pub fn anchors(&self) -> &[MemoryEntry<T>] {
        &self.anchors
    }

    pub fn rolling(&self) -> impl Iterator<Item = &MemoryEntry<T>> {
        self.rolling.iter()
    }

    pub fn rolling_len(&self) -> usize {
        self.rolling.len()
    }

    pub fn push(&mut self, entry: MemoryEntry<T>) {
        if self.capacity == 0 {
            return;
        }
        if self.rolling.len() == self.capacity {
            self.rolling.pop_front();
        }
        self.rolling.push_back(entry);
    }

    /// Highest similarity over all entries, anchors first, so an anchor wins
    /// any tie.
    pub fn similarity(&self, v: &EmbeddingVector<T>) -> Result<T, PoolError> {
        let mut best = -T::one();
        for e in self.anchors.iter().chain(&self.rolling) {
            let s = cosine(v, &e.embedding)?;
            if s > best {
                best = s;
            }
        }
        Ok(best)
    }
}

/// Embedding-file key for an anchor: the first-frame anchor is the pool's
/// identity entry, mined anchors use their detector instance.
fn anchor_key(frame_idx: usize, source: AnchorSource, instance_id: Option<&str>) -> ObjectKey<'_> {
    match source {
        AnchorSource::FirstFrame => ObjectKey::new(POOL_FRAME, "identity"),
        AnchorSource::Mined => ObjectKey::new(frame_idx as i64, instance_id.unwrap_or(ANCHOR_ID)),
    }
}

/// Embeds every schedule anchor into permanent memory.
pub fn anchor_memory<T: Scalar, E: Embedder<T> + ?Sized>(
    frames: &[FrameImage],
    schedule: &PromptSchedule<T>,
    embedder: &E,
    crop: CropParams,
) -> Result<Vec<MemoryEntry<T>>, TrackError> {
    let mut out = Vec::with_capacity(schedule.anchors.len());
    for a in &schedule.anchors {
        let frame = frames.get(a.frame_idx).ok_or(TrackError::AnchorOutOfRange {
            frame: a.frame_idx,
            num_frames: frames.len(),
        })?;
        if (a.mask.width(), a.mask.height()) != (frame.width(), frame.height()) {
            return Err(TrackError::AnchorSize {
                frame: a.frame_idx,
                expected: (frame.width(), frame.height()),
                actual: (a.mask.width(), a.mask.height()),
            });
        }
        let mask = rle_decode(&a.mask)?;
        let patch = object_patch(frame, &mask, crop)?;
        let key = anchor_key(a.frame_idx, a.source, a.instance_id.as_deref());
        out.push(MemoryEntry {
            frame_idx: a.frame_idx,
            embedding: embedder.embed(key, &patch)?,
            mask: a.mask.clone(),
            kind: MemoryKind::Anchor,
        });
    }
    Ok(out)
}

/// Tracks the target through `frames`.
///
/// All anchors enter memory before the sweep, so they guide frames on both
/// sides of their own index. Anchor frames emit the anchor mask verbatim.
/// Elsewhere the candidate with the highest memory similarity is emitted if
/// it reaches `tau_track` (ties go to the lower instance id) and joins the
/// rolling memory if it also reaches `tau_mem`.
pub fn propagate<T, D, E>(
    frames: &[FrameImage],
    schedule: &PromptSchedule<T>,
    detector: &D,
    embedder: &E,
    params: &TrackerParams<T>,
) -> Result<TrackResult<T>, TrackError>
where
    T: Scalar,
    D: Detector + ?Sized,
    E: Embedder<T> + ?Sized,
{
    params.validate()?;
    let first = frames.first().ok_or(TrackError::NoFrames)?;
    let mut memory = Memory::new(anchor_memory(frames, schedule, embedder, params.crop)?, params.mem_capacity);
    let prompt = schedule
        .anchor_at(0)
        .map(|a| rle_decode(&a.mask))
        .transpose()?
        .unwrap_or(BinaryMask::new(first.width(), first.height())?);

    let mut out = Vec::with_capacity(frames.len());
    for (idx, frame) in frames.iter().enumerate() {
        if let Some(a) = schedule.anchor_at(idx) {
            out.push(FrameTrack {
                mask: a.mask.clone(),
                score: Some(a.score),
                tag: FrameTag::Anchor,
                instance_id: a.instance_id.clone(),
                rolling_len: memory.rolling_len(),
            });
            continue;
        }

        let mut candidates = detector.detect(idx, frame, &prompt)?;
        candidates.sort_by(|a, b| a.instance_id.cmp(&b.instance_id));
        let mut best: Option<(T, BinaryMask, EmbeddingVector<T>, &str)> = None;
        for c in &candidates {
            let mask = c.decode_mask()?;
            let patch = match object_patch(frame, &mask, params.crop) {
                Ok(p) => p,
                Err(MaskError::EmptyMask) => continue,
                Err(e) => return Err(e.into()),
            };
            let v = embedder.embed(ObjectKey::new(idx as i64, &c.instance_id), &patch)?;
            let s = memory.similarity(&v)?;
            if best.as_ref().is_none_or(|b| s > b.0) {
                best = Some((s, mask, v, &c.instance_id));
            }
        }

        let track = match best {
            Some((s, mask, v, id)) if s >= params.tau_track => {
                let rle = rle_encode(&mask);
                if s >= params.tau_mem {
                    memory.push(MemoryEntry {
                        frame_idx: idx,
                        embedding: v,
                        mask: rle.clone(),
                        kind: MemoryKind::Rolling,
                    });
                }
                FrameTrack {
                    mask: rle,
                    score: Some(s),
                    tag: FrameTag::Matched,
                    instance_id: Some(id.to_string()),
                    rolling_len: memory.rolling_len(),
                }
            }
            other => FrameTrack {
                mask: RleMask::empty(frame.width(), frame.height()),
                score: other.map(|b| b.0),
                tag: FrameTag::Absent,
                instance_id: None,
                rolling_len: memory.rolling_len(),
            },
        };
        out.push(track);
    }
    Ok(TrackResult { frames: out })
}

/// [`propagate`] with only the first-frame mask as prompt.
pub fn propagate_baseline<T, D, E>(
    frames: &[FrameImage],
    first_frame_mask: &BinaryMask,
    detector: &D,
    embedder: &E,
    params: &TrackerParams<T>,
) -> Result<TrackResult<T>, TrackError>
where
    T: Scalar,
    D: Detector + ?Sized,
    E: Embedder<T> + ?Sized,
{
    let schedule = PromptSchedule::first_frame_only("baseline", rle_encode(first_frame_mask));
    propagate(frames, &schedule, detector, embedder, params)
}
