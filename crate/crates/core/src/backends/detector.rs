use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{read_lines, BackendError};
use crate::maskmedia::{bbox_of, dilate, erode, iou, rle_decode, rle_encode, BBox, BinaryMask, FrameImage, RleMask};
use crate::synth::GroundTruth;

/// A same-category object found in one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub frame_idx: usize,
    pub instance_id: String,
    pub bbox: BBox,
    pub mask: RleMask,
    pub det_score: f64,
}

impl Candidate {
    pub fn decode_mask(&self) -> Result<BinaryMask, BackendError> {
        Ok(rle_decode(&self.mask)?)
    }
}

/// Category-level detector prompted by the first-frame target mask.
pub trait Detector {
    /// Candidates in frame `frame_idx`, ordered by descending `det_score`
    /// (ties by ascending instance id).
    fn detect(
        &self,
        frame_idx: usize,
        frame: &FrameImage,
        prompt: &BinaryMask,
    ) -> Result<Vec<Candidate>, BackendError>;
}

impl<D: Detector + ?Sized> Detector for &D {
    fn detect(&self, frame_idx: usize, frame: &FrameImage, prompt: &BinaryMask) -> Result<Vec<Candidate>, BackendError> {
        (**self).detect(frame_idx, frame, prompt)
    }
}

impl<D: Detector + ?Sized> Detector for Box<D> {
    fn detect(&self, frame_idx: usize, frame: &FrameImage, prompt: &BinaryMask) -> Result<Vec<Candidate>, BackendError> {
        (**self).detect(frame_idx, frame, prompt)
    }
}

/// Runs `detector` over every frame except the prompt frame 0. The returned
/// vector is indexed by frame; entry 0 is always empty.
pub fn detect_video<D: Detector + ?Sized>(
    detector: &D,
    frames: &[FrameImage],
    prompt: &BinaryMask,
) -> Result<Vec<Vec<Candidate>>, BackendError> {
    let mut out = Vec::with_capacity(frames.len());
    for (idx, frame) in frames.iter().enumerate() {
        if idx == 0 {
            out.push(Vec::new());
        } else {
            out.push(detector.detect(idx, frame, prompt)?);
        }
    }
    Ok(out)
}

fn sort_candidates(cands: &mut [Candidate]) {
    cands.sort_by(|a, b| {
        b.det_score
            .total_cmp(&a.det_score)
            .then_with(|| a.instance_id.cmp(&b.instance_id))
    });
}

fn check_frame(c: &Candidate, frame: &FrameImage) -> Result<(), BackendError> {
    if c.mask.width() != frame.width() || c.mask.height() != frame.height() {
        return Err(BackendError::FrameSize {
            frame: c.frame_idx,
            expected: (frame.width(), frame.height()),
            actual: (c.mask.width(), c.mask.height()),
        });
    }
    Ok(())
}

/// One line of a detections file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionRecord {
    pub frame: usize,
    pub id: String,
    pub bbox: [u32; 4],
    pub rle: RleMask,
    pub det_score: f64,
}

impl DetectionRecord {
    pub fn from_candidate(c: &Candidate) -> Self {
        DetectionRecord {
            frame: c.frame_idx,
            id: c.instance_id.clone(),
            bbox: [c.bbox.x, c.bbox.y, c.bbox.w, c.bbox.h],
            rle: c.mask.clone(),
            det_score: c.det_score,
        }
    }
}

/// Replays detections exported by an external detector.
#[derive(Debug, Clone, Default)]
pub struct FileDetector {
    by_frame: BTreeMap<usize, Vec<Candidate>>,
}

impl FileDetector {
    pub fn load(path: &Path) -> Result<Self, BackendError> {
        let file = std::fs::File::open(path).map_err(|e| BackendError::io(path, e))?;
        Self::from_reader(std::io::BufReader::new(file))
    }

    pub fn from_reader(reader: impl BufRead) -> Result<Self, BackendError> {
        let mut by_frame: BTreeMap<usize, Vec<Candidate>> = BTreeMap::new();
        for item in read_lines(reader) {
            let (line, text) = item?;
            let rec: DetectionRecord = serde_json::from_str(&text).map_err(|e| BackendError::Parse {
                line,
                message: e.to_string(),
            })?;
            rec.rle.validate().map_err(|source| BackendError::Record { line, source })?;
            let [x, y, w, h] = rec.bbox;
            if w == 0 || h == 0 {
                return Err(BackendError::Parse {
                    line,
                    message: "bbox width and height must be at least 1".into(),
                });
            }
            if !(0.0..=1.0).contains(&rec.det_score) {
                return Err(BackendError::Parse {
                    line,
                    message: format!("det_score {} outside [0, 1]", rec.det_score),
                });
            }
            by_frame.entry(rec.frame).or_default().push(Candidate {
                frame_idx: rec.frame,
                instance_id: rec.id,
                bbox: BBox::new(x, y, w, h),
                mask: rec.rle,
                det_score: rec.det_score,
            });
        }
        for cands in by_frame.values_mut() {
            sort_candidates(cands);
        }
        Ok(FileDetector { by_frame })
    }

    pub fn num_records(&self) -> usize {
        self.by_frame.values().map(Vec::len).sum()
    }
}

impl Detector for FileDetector {
    fn detect(&self, frame_idx: usize, frame: &FrameImage, _prompt: &BinaryMask) -> Result<Vec<Candidate>, BackendError> {
        let cands = self.by_frame.get(&frame_idx).cloned().unwrap_or_default();
        for c in &cands {
            check_frame(c, frame)?;
        }
        Ok(cands)
    }
}

/// Perturbation applied by [`OracleDetector`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct JitterParams {
    /// Maximum erosion/dilation radius in pixels.
    pub radius: u32,
    /// Probability that an instance is missed in a frame.
    pub drop_prob: f64,
    pub seed: u64,
}

impl Default for JitterParams {
    fn default() -> Self {
        Self {
            radius: 0,
            drop_prob: 0.0,
            seed: 0,
        }
    }
}

/// Detector that reads every instance straight from ground truth.
///
/// Each `(frame, instance)` pair draws from its own ChaCha8 stream
/// (`stream = frame << 20 | instance ordinal`), so results do not depend on
/// query order. An instance is dropped when a uniform draw falls below
/// `drop_prob`; otherwise its mask is dilated (positive) or eroded
/// (negative) by a radius drawn uniformly from `-radius..=radius`. The
/// detection score is the IoU between the perturbed and the clean mask.
#[derive(Debug, Clone)]
pub struct OracleDetector {
    instances: Vec<BTreeMap<String, BinaryMask>>,
    jitter: JitterParams,
}

impl OracleDetector {
    pub fn new(gt: GroundTruth, jitter: JitterParams) -> Result<Self, BackendError> {
        Self::from_instances(gt.frames, jitter)
    }

    /// Per-frame instance masks, keyed by instance id.
    pub fn from_instances(instances: Vec<BTreeMap<String, BinaryMask>>, jitter: JitterParams) -> Result<Self, BackendError> {
        if !(0.0..=1.0).contains(&jitter.drop_prob) {
            return Err(BackendError::InvalidParameter(format!(
                "drop_prob {} outside [0, 1]",
                jitter.drop_prob
            )));
        }
        Ok(Self { instances, jitter })
    }
}

impl Detector for OracleDetector {
    fn detect(&self, frame_idx: usize, frame: &FrameImage, _prompt: &BinaryMask) -> Result<Vec<Candidate>, BackendError> {
        let Some(instances) = self.instances.get(frame_idx) else {
            return Ok(Vec::new());
        };
        let mut out = Vec::new();
        for (ordinal, (id, clean)) in instances.iter().enumerate() {
            if clean.is_empty() {
                continue;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(self.jitter.seed);
            rng.set_stream(((frame_idx as u64) << 20) | ordinal as u64);
            let drop_draw: f64 = rng.random();
            let r = self.jitter.radius as i64;
            let offset = if r > 0 { rng.random_range(-r..=r) } else { 0 };
            if drop_draw < self.jitter.drop_prob {
                continue;
            }
            let mask = match offset {
                0 => clean.clone(),
                o if o > 0 => dilate(clean, o as u32),
                o => erode(clean, (-o) as u32),
            };
            let Some(bbox) = bbox_of(&mask) else {
                continue;
            };
            let det_score: f64 = iou(&mask, clean)?;
            let cand = Candidate {
                frame_idx,
                instance_id: id.clone(),
                bbox,
                mask: rle_encode(&mask),
                det_score,
            };
            check_frame(&cand, frame)?;
            out.push(cand);
        }
        sort_candidates(&mut out);
        Ok(out)
    }
}
