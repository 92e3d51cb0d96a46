//! Stages shared by the single-step commands and `run`.

use std::path::Path;

use reanchor::anchors::{build_schedule, select_anchors, PromptSchedule};
use reanchor::backends::{detect_video, Detector, Embedder, FileDetector, FileEmbedder, OracleDetector, PatchEmbedder};
use reanchor::featurepool::{build_pool, score_all, MatchScore, TargetFeaturePool};
use reanchor::maskmedia::{boundary, rle_encode, BinaryMask, FrameImage};
use reanchor::metrics::{evaluate_video, VideoMetrics};
use reanchor::tracker::{propagate, TrackResult};

use crate::config::PipelineConfig;
use crate::error::{CliError, CliResult};
use crate::formats::{PoolFile, ScheduleFile, TrackFile};
use crate::io;

pub type DynDetector = Box<dyn Detector>;
pub type DynEmbedder = Box<dyn Embedder<f64>>;

pub fn file_detector(path: &Path) -> CliResult<DynDetector> {
    Ok(Box::new(FileDetector::load(path)?))
}

/// Ground-truth detector; the instance sequences must match the video length.
pub fn oracle_detector(gt_root: &Path, num_frames: usize, config: &PipelineConfig) -> CliResult<DynDetector> {
    let instances = io::read_instances(gt_root)?;
    if instances.len() != num_frames {
        return Err(CliError::Data(format!(
            "{}: {} ground-truth frames for a {num_frames}-frame video",
            gt_root.display(),
            instances.len()
        )));
    }
    Ok(Box::new(OracleDetector::from_instances(instances, config.jitter())?))
}

pub fn embedder(embeddings: Option<&Path>) -> CliResult<DynEmbedder> {
    Ok(match embeddings {
        Some(p) => Box::new(FileEmbedder::load(p)?),
        None => Box::new(PatchEmbedder),
    })
}

/// Video label derived from `<video>/frames`.
pub fn video_name(frames_dir: &Path) -> String {
    frames_dir
        .canonicalize()
        .ok()
        .and_then(|p| p.parent().and_then(|p| p.file_name()).map(|n| n.to_string_lossy().into_owned()))
        .unwrap_or_else(|| "video".to_string())
}

pub struct Mined {
    pub schedule: PromptSchedule<f64>,
    pub pool: TargetFeaturePool<f64>,
    pub scores: Vec<MatchScore<f64>>,
    pub warnings: Vec<String>,
}

pub fn mine(
    video: &str,
    frames: &[FrameImage],
    first_mask: &BinaryMask,
    detector: &dyn Detector,
    embedder: &dyn Embedder<f64>,
    config: &PipelineConfig,
) -> CliResult<Mined> {
    let first = frames.first().ok_or_else(|| CliError::Data("video has no frames".into()))?;
    if (first_mask.width(), first_mask.height()) != (first.width(), first.height()) {
        return Err(CliError::Data(format!(
            "first-frame mask is {}x{}, frames are {}x{}",
            first_mask.width(),
            first_mask.height(),
            first.width(),
            first.height()
        )));
    }
    if first_mask.is_empty() {
        return Err(CliError::Data("first-frame mask is empty".into()));
    }
    let crop = config.crop();
    let pool = build_pool(first, first_mask, embedder, &config.pool.transforms, crop)?;
    let candidates = detect_video(detector, frames, first_mask)?;
    let scored = score_all(frames, &candidates, &pool, embedder, crop)?;
    let mut warnings = scored.warnings;
    let mined = select_anchors(&scored.scores, &config.selection());
    if mined.is_empty() {
        warnings.push(format!(
            "{video}: no candidate reached theta {}; schedule holds the first frame only",
            config.select.theta
        ));
    }
    let schedule = build_schedule(video, rle_encode(first_mask), mined)?;
    Ok(Mined {
        schedule,
        pool,
        scores: scored.scores,
        warnings,
    })
}

/// Writes the schedule plus `scores.csv` and `pool.json` in the same
/// directory.
pub fn write_mined(schedule_path: &Path, m: &Mined) -> CliResult<()> {
    let dir = schedule_path.parent().unwrap_or(Path::new(""));
    io::write_json(schedule_path, &ScheduleFile::from_schedule(&m.schedule))?;
    crate::formats::write_scores_csv(&dir.join("scores.csv"), &m.scores)?;
    io::write_json(&dir.join("pool.json"), &PoolFile::from_pool(&m.pool))
}

pub fn track(
    frames: &[FrameImage],
    schedule: &PromptSchedule<f64>,
    detector: &dyn Detector,
    embedder: &dyn Embedder<f64>,
    config: &PipelineConfig,
) -> CliResult<TrackResult<f64>> {
    Ok(propagate(frames, schedule, detector, embedder, &config.tracker_params())?)
}

/// Writes `pred/%05d.png` and `track.json` under `out`; returns the masks.
pub fn write_track(out: &Path, video: &str, result: &TrackResult<f64>) -> CliResult<Vec<BinaryMask>> {
    let masks = result.masks()?;
    io::write_masks(&out.join("pred"), &masks)?;
    io::write_json(&out.join("track.json"), &TrackFile::from_result(video, result))?;
    Ok(masks)
}

pub fn evaluate(pred: &[BinaryMask], gt: &[BinaryMask], tol: u32) -> CliResult<VideoMetrics<f64>> {
    Ok(evaluate_video(pred, gt, tol)?)
}

const PRED_TINT: [u8; 3] = [0, 170, 255];
const GT_EDGE: [u8; 3] = [255, 255, 255];
const ANCHOR_BORDER: [u8; 3] = [255, 210, 0];
const GAP: u32 = 4;

/// One panel: prediction filled, ground-truth contour drawn, frame border
/// flagged when it is an anchor.
fn overlay_panel(frame: &FrameImage, pred: &BinaryMask, gt: &BinaryMask, anchor: bool) -> FrameImage {
    let mut out = frame.clone();
    for (r, c) in pred.iter_set() {
        let px = out.get(r, c);
        let mixed = std::array::from_fn(|i| ((px[i] as u16 + PRED_TINT[i] as u16) / 2) as u8);
        out.put(r, c, mixed);
    }
    for (r, c) in boundary(gt).iter_set() {
        out.put(r, c, GT_EDGE);
    }
    if anchor {
        let (w, h) = (out.width(), out.height());
        for r in 0..h {
            for c in 0..w {
                if r < 2 || c < 2 || r + 2 >= h || c + 2 >= w {
                    out.put(r, c, ANCHOR_BORDER);
                }
            }
        }
    }
    out
}

/// Left panel baseline, right panel mined, separated by a black gap.
pub fn overlay_pair(
    frame: &FrameImage,
    gt: &BinaryMask,
    baseline: (&BinaryMask, bool),
    mined: (&BinaryMask, bool),
) -> FrameImage {
    let left = overlay_panel(frame, baseline.0, gt, baseline.1);
    let right = overlay_panel(frame, mined.0, gt, mined.1);
    let (w, h) = (frame.width(), frame.height());
    let mut out = FrameImage::filled(2 * w + GAP, h, [0, 0, 0]).expect("non-zero size");
    for r in 0..h {
        for c in 0..w {
            out.put(r, c, left.get(r, c));
            out.put(r, c + w + GAP, right.get(r, c));
        }
    }
    out
}
