//! Greedy, temporally suppressed anchor selection and prompt schedules.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::featurepool::{score_order, MatchScore};
use crate::maskmedia::RleMask;
use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AnchorError {
    #[error("two anchors claim frame {0}")]
    DuplicateFrame(usize),
    #[error("invalid selection parameters: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnchorSource {
    FirstFrame,
    Mined,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Anchor<T> {
    pub frame_idx: usize,
    pub mask: RleMask,
    pub score: T,
    pub source: AnchorSource,
    /// Detector instance the anchor was mined from.
    pub instance_id: Option<String>,
}

impl<T: Scalar> Anchor<T> {
    pub fn first_frame(mask: RleMask) -> Self {
        Self {
            frame_idx: 0,
            mask,
            score: T::one(),
            source: AnchorSource::FirstFrame,
            instance_id: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionParams<T> {
    /// Maximum number of mined anchors.
    pub k: usize,
    pub theta_min: T,
    /// Candidates within this many frames of an accepted anchor are dropped.
    pub delta: usize,
}

impl<T: Scalar> Default for SelectionParams<T> {
    fn default() -> Self {
        Self {
            k: 3,
            theta_min: T::lit(0.5),
            delta: 15,
        }
    }
}

impl<T: Scalar> SelectionParams<T> {
    pub fn validate(&self) -> Result<(), AnchorError> {
        if !(self.theta_min >= -T::one() && self.theta_min <= T::one()) {
            return Err(AnchorError::InvalidParameter(format!(
                "theta must lie in [-1, 1], got {}",
                self.theta_min
            )));
        }
        Ok(())
    }
}

/// Greedy scan in descending score order. A candidate is accepted when its
/// score reaches `theta_min`, it is not on frame 0, and it lies more than
/// `delta` frames from every accepted anchor. Stops after `k` acceptances.
pub fn select_anchors<T: Scalar>(scored: &[MatchScore<T>], params: &SelectionParams<T>) -> Vec<Anchor<T>> {
    let mut order: Vec<&MatchScore<T>> = scored.iter().collect();
    order.sort_by(|a, b| score_order(a, b));
    let mut accepted: Vec<Anchor<T>> = Vec::new();
    for m in order {
        if accepted.len() >= params.k {
            break;
        }
        // scores are sorted, so nothing after this can pass either
        if m.score.partial_cmp(&params.theta_min).is_none_or(Ordering::is_lt) {
            break;
        }
        let f = m.candidate.frame_idx;
        if f == 0 || accepted.iter().any(|a| a.frame_idx.abs_diff(f) <= params.delta) {
            continue;
        }
        accepted.push(Anchor {
            frame_idx: f,
            mask: m.candidate.mask.clone(),
            score: m.score,
            source: AnchorSource::Mined,
            instance_id: Some(m.candidate.instance_id.clone()),
        });
    }
    accepted
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromptSchedule<T> {
    pub video_id: String,
    /// Sorted by frame, one per frame, first entry is the first-frame anchor.
    pub anchors: Vec<Anchor<T>>,
}

pub fn build_schedule<T: Scalar>(
    video_id: &str,
    first_frame_mask: RleMask,
    mined: Vec<Anchor<T>>,
) -> Result<PromptSchedule<T>, AnchorError> {
    let mut anchors = Vec::with_capacity(mined.len() + 1);
    anchors.push(Anchor::first_frame(first_frame_mask));
    anchors.extend(mined);
    PromptSchedule::new(video_id, anchors)
}

impl<T: Scalar> PromptSchedule<T> {
    /// Sorts the anchors and checks that frame 0 is present exactly once and
    /// no frame repeats.
    pub fn new(video_id: &str, mut anchors: Vec<Anchor<T>>) -> Result<Self, AnchorError> {
        anchors.sort_by_key(|a| a.frame_idx);
        for pair in anchors.windows(2) {
            if pair[0].frame_idx == pair[1].frame_idx {
                return Err(AnchorError::DuplicateFrame(pair[0].frame_idx));
            }
        }
        if anchors.first().is_none_or(|a| a.frame_idx != 0) {
            return Err(AnchorError::InvalidParameter("schedule has no frame-0 anchor".into()));
        }
        Ok(Self {
            video_id: video_id.to_string(),
            anchors,
        })
    }

    pub fn first_frame_only(video_id: &str, first_frame_mask: RleMask) -> Self {
        Self {
            video_id: video_id.to_string(),
            anchors: vec![Anchor::first_frame(first_frame_mask)],
        }
    }

    pub fn anchor_at(&self, frame_idx: usize) -> Option<&Anchor<T>> {
        self.anchors
            .binary_search_by_key(&frame_idx, |a| a.frame_idx)
            .ok()
            .map(|i| &self.anchors[i])
    }

    pub fn mined(&self) -> impl Iterator<Item = &Anchor<T>> {
        self.anchors.iter().filter(|a| a.source == AnchorSource::Mined)
    }
}
