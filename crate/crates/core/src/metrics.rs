//! Region similarity J, dilated-boundary F, and the disappearance and
//! reappearance composites.

use thiserror::Error;

use crate::maskmedia::{boundary, dilate, iou, BinaryMask, MaskError};
use crate::scalar::{ratio, Scalar};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("prediction has {pred} frames, ground truth has {gt}")]
    LengthMismatch { pred: usize, gt: usize },
    #[error("nothing to evaluate: only the prompt frame is present")]
    NoEvaluatedFrames,
    #[error("cannot aggregate an empty dataset")]
    EmptyDataset,
    #[error(transparent)]
    Mask(#[from] MaskError),
}

/// `ceil(0.8%` of the image diagonal`)`.
pub fn default_boundary_tol(width: u32, height: u32) -> u32 {
    let diag = (width as f64).hypot(height as f64);
    (0.008 * diag).ceil() as u32
}

/// IoU, except that an empty ground truth scores 1 for an empty prediction
/// and 0 otherwise.
pub fn region_j<T: Scalar>(pred: &BinaryMask, gt: &BinaryMask) -> Result<T, MaskError> {
    if gt.is_empty() {
        if !pred.same_dims(gt) {
            return Err(MaskError::DimensionMismatch {
                left: (pred.width(), pred.height()),
                right: (gt.width(), gt.height()),
            });
        }
        return Ok(if pred.is_empty() { T::one() } else { T::zero() });
    }
    iou(pred, gt)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryScore<T> {
    pub precision: T,
    pub recall: T,
    pub f: T,
}

/// Boundary pixels of each mask count as matched when they lie within
/// Euclidean distance `tolerance` of the other mask's boundary.
pub fn boundary_f<T: Scalar>(pred: &BinaryMask, gt: &BinaryMask, tolerance: u32) -> Result<BoundaryScore<T>, MaskError> {
    if !pred.same_dims(gt) {
        return Err(MaskError::DimensionMismatch {
            left: (pred.width(), pred.height()),
            right: (gt.width(), gt.height()),
        });
    }
    let bp = boundary(pred);
    let bg = boundary(gt);
    let (np, ng) = (bp.area(), bg.area());
    if np == 0 && ng == 0 {
        return Ok(BoundaryScore {
            precision: T::one(),
            recall: T::one(),
            f: T::one(),
        });
    }
    if np == 0 || ng == 0 {
        return Ok(BoundaryScore {
            precision: T::zero(),
            recall: T::zero(),
            f: T::zero(),
        });
    }
    let precision: T = ratio(bp.intersection_area(&dilate(&bg, tolerance))?, np);
    let recall: T = ratio(bg.intersection_area(&dilate(&bp, tolerance))?, ng);
    let f = if precision + recall > T::zero() {
        T::lit(2.0) * precision * recall / (precision + recall)
    } else {
        T::zero()
    };
    Ok(BoundaryScore { precision, recall, f })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameEval<T> {
    pub frame_idx: usize,
    pub j: T,
    pub f: T,
    pub gt_empty: bool,
    /// Non-empty ground truth after the first empty one.
    pub reappearance: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VideoMetrics<T> {
    pub j_mean: T,
    pub f_mean: T,
    pub jf: T,
    /// Mean of `(j + f) / 2` over empty-GT frames.
    pub jf_d: Option<T>,
    /// Mean of `(j + f) / 2` over reappearance frames.
    pub jf_r: Option<T>,
    pub n_frames: usize,
    pub n_disappear: usize,
    pub n_reappear: usize,
}

/// Per-frame scores for every frame except the prompt frame 0.
pub fn evaluate_frames<T: Scalar>(
    pred: &[BinaryMask],
    gt: &[BinaryMask],
    boundary_tol: u32,
) -> Result<Vec<FrameEval<T>>, MetricsError> {
    if pred.len() != gt.len() {
        return Err(MetricsError::LengthMismatch {
            pred: pred.len(),
            gt: gt.len(),
        });
    }
    let mut seen_empty = false;
    let mut out = Vec::with_capacity(gt.len().saturating_sub(1));
    for (idx, (p, g)) in pred.iter().zip(gt).enumerate() {
        let gt_empty = g.is_empty();
        seen_empty |= gt_empty;
        if idx == 0 {
            continue;
        }
        out.push(FrameEval {
            frame_idx: idx,
            j: region_j(p, g)?,
            f: boundary_f(p, g, boundary_tol)?.f,
            gt_empty,
            reappearance: seen_empty && !gt_empty,
        });
    }
    Ok(out)
}

pub fn summarize<T: Scalar>(evals: &[FrameEval<T>]) -> Result<VideoMetrics<T>, MetricsError> {
    if evals.is_empty() {
        return Err(MetricsError::NoEvaluatedFrames);
    }
    let half = T::lit(0.5);
    let j_mean = mean(evals.iter().map(|e| e.j)).unwrap_or_default();
    let f_mean = mean(evals.iter().map(|e| e.f)).unwrap_or_default();
    let composite = |keep: fn(&FrameEval<T>) -> bool| mean(evals.iter().filter(|e| keep(e)).map(|e| (e.j + e.f) * half));
    Ok(VideoMetrics {
        j_mean,
        f_mean,
        jf: (j_mean + f_mean) * half,
        jf_d: composite(|e| e.gt_empty),
        jf_r: composite(|e| e.reappearance),
        n_frames: evals.len(),
        n_disappear: evals.iter().filter(|e| e.gt_empty).count(),
        n_reappear: evals.iter().filter(|e| e.reappearance).count(),
    })
}

/// Scores a predicted mask sequence against the target's ground truth.
pub fn evaluate_video<T: Scalar>(
    pred: &[BinaryMask],
    gt: &[BinaryMask],
    boundary_tol: u32,
) -> Result<VideoMetrics<T>, MetricsError> {
    summarize(&evaluate_frames(pred, gt, boundary_tol)?)
}

/// Dataset-level means; the subset columns average only the videos where
/// they are defined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetReport<T> {
    pub j_mean: T,
    pub f_mean: T,
    pub jf: T,
    pub jf_d: Option<T>,
    pub jf_r: Option<T>,
    pub n_videos: usize,
    pub n_frames: usize,
    pub n_disappear: usize,
    pub n_reappear: usize,
}

impl<T: Scalar> DatasetReport<T> {
    /// `J&F J F J&F_d J&F_r` as percentages with two decimals; undefined
    /// columns print as `-`.
    pub fn percent_row(&self) -> String {
        let pct = |v: Option<T>| v.map_or_else(|| "-".to_string(), |v| format!("{:.2}", v.as_f64() * 100.0));
        [
            pct(Some(self.jf)),
            pct(Some(self.j_mean)),
            pct(Some(self.f_mean)),
            pct(self.jf_d),
            pct(self.jf_r),
        ]
        .join(" ")
    }
}

pub fn aggregate<T: Scalar>(videos: &[VideoMetrics<T>]) -> Result<DatasetReport<T>, MetricsError> {
    if videos.is_empty() {
        return Err(MetricsError::EmptyDataset);
    }
    let j_mean = mean(videos.iter().map(|v| v.j_mean)).unwrap_or_default();
    let f_mean = mean(videos.iter().map(|v| v.f_mean)).unwrap_or_default();
    Ok(DatasetReport {
        j_mean,
        f_mean,
        jf: (j_mean + f_mean) * T::lit(0.5),
        jf_d: mean(videos.iter().filter_map(|v| v.jf_d)),
        jf_r: mean(videos.iter().filter_map(|v| v.jf_r)),
        n_videos: videos.len(),
        n_frames: videos.iter().map(|v| v.n_frames).sum(),
        n_disappear: videos.iter().map(|v| v.n_disappear).sum(),
        n_reappear: videos.iter().map(|v| v.n_reappear).sum(),
    })
}

fn mean<T: Scalar>(values: impl Iterator<Item = T>) -> Option<T> {
    let (sum, n) = values.fold((T::zero(), 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / T::count(n))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rect(w: u32, h: u32, r0: u32, c0: u32, rh: u32, cw: u32) -> BinaryMask {
        BinaryMask::from_fn(w, h, |r, c| (r0..r0 + rh).contains(&r) && (c0..c0 + cw).contains(&c)).unwrap()
    }

    #[test]
    fn tolerance_default() {
        assert_eq!(default_boundary_tol(128, 128), 2);
        assert_eq!(default_boundary_tol(854, 480), 8);
    }

    #[test]
    fn region_conventions() {
        let a = rect(8, 8, 1, 1, 3, 3);
        let e = BinaryMask::new(8, 8).unwrap();
        assert_eq!(region_j::<f64>(&a, &a).unwrap(), 1.0);
        assert_eq!(region_j::<f64>(&e, &e).unwrap(), 1.0);
        assert_eq!(region_j::<f64>(&a, &e).unwrap(), 0.0);
        assert_eq!(region_j::<f64>(&e, &a).unwrap(), 0.0);
        // 4 and 4 pixels sharing 2: 2 / 6
        let p = rect(4, 4, 0, 0, 2, 2);
        let g = rect(4, 4, 0, 1, 2, 2);
        assert!((region_j::<f64>(&p, &g).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!(region_j::<f64>(&a, &BinaryMask::new(4, 4).unwrap()).is_err());
    }

    #[test]
    fn boundary_conventions() {
        let a = rect(16, 16, 2, 2, 6, 6);
        let e = BinaryMask::new(16, 16).unwrap();
        assert_eq!(boundary_f::<f64>(&a, &a, 0).unwrap().f, 1.0);
        assert_eq!(boundary_f::<f64>(&e, &e, 2).unwrap().f, 1.0);
        assert_eq!(boundary_f::<f64>(&e, &a, 2).unwrap().f, 0.0);
        assert_eq!(boundary_f::<f64>(&a, &e, 2).unwrap().f, 0.0);
    }

    #[test]
    fn shifted_square_by_hand() {
        // 4x4 squares one column apart, 12 boundary pixels each; only the
        // three shared columns of the top and bottom rows coincide.
        let p = rect(12, 12, 2, 2, 4, 4);
        let g = rect(12, 12, 2, 3, 4, 4);
        let s = boundary_f::<f64>(&p, &g, 0).unwrap();
        assert!((s.precision - 0.5).abs() < 1e-12);
        assert!((s.recall - 0.5).abs() < 1e-12);
        let s = boundary_f::<f64>(&p, &g, 1).unwrap();
        assert_eq!(s.f, 1.0);
    }

    #[test]
    fn two_frame_mean() {
        let g1 = rect(4, 4, 0, 1, 2, 2);
        let p1 = rect(4, 4, 0, 0, 2, 2);
        let g2 = rect(4, 4, 2, 2, 2, 2);
        let pred = vec![g1.clone(), p1, g2.clone()];
        let gt = vec![g1.clone(), g1, g2];
        let m: VideoMetrics<f64> = evaluate_video(&pred, &gt, 4).unwrap();
        assert!((m.j_mean - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(m.f_mean, 1.0);
        assert_eq!(m.n_frames, 2);
        assert_eq!((m.jf_d, m.jf_r), (None, None));
    }

    #[test]
    fn subsets() {
        let full = rect(8, 8, 1, 1, 4, 4);
        let e = BinaryMask::new(8, 8).unwrap();
        // gt: T T E E T T ; pred misses frame 4 and hallucinates on frame 3
        let gt = vec![full.clone(), full.clone(), e.clone(), e.clone(), full.clone(), full.clone()];
        let pred = vec![full.clone(), full.clone(), e.clone(), full.clone(), e.clone(), full.clone()];
        let evals: Vec<FrameEval<f64>> = evaluate_frames(&pred, &gt, 1).unwrap();
        assert_eq!(evals.len(), 5);
        let flags: Vec<(bool, bool)> = evals.iter().map(|e| (e.gt_empty, e.reappearance)).collect();
        assert_eq!(flags, vec![(false, false), (true, false), (true, false), (false, true), (false, true)]);
        let m = summarize(&evals).unwrap();
        assert_eq!(m.n_disappear, 2);
        assert_eq!(m.n_reappear, 2);
        assert_eq!(m.jf_d, Some(0.5));
        assert_eq!(m.jf_r, Some(0.5));
        assert!((m.j_mean - 3.0 / 5.0).abs() < 1e-12);
        assert_eq!(m.jf, (m.j_mean + m.f_mean) / 2.0);
    }

    #[test]
    fn errors() {
        let a = rect(4, 4, 0, 0, 2, 2);
        assert!(matches!(
            evaluate_video::<f64>(std::slice::from_ref(&a), &[a.clone(), a.clone()], 1),
            Err(MetricsError::LengthMismatch { pred: 1, gt: 2 })
        ));
        assert!(matches!(
            evaluate_video::<f64>(std::slice::from_ref(&a), std::slice::from_ref(&a), 1),
            Err(MetricsError::NoEvaluatedFrames)
        ));
        assert!(matches!(aggregate::<f64>(&[]), Err(MetricsError::EmptyDataset)));
    }

    fn video(j: f64, f: f64, jf_d: Option<f64>, jf_r: Option<f64>) -> VideoMetrics<f64> {
        VideoMetrics {
            j_mean: j,
            f_mean: f,
            jf: (j + f) / 2.0,
            jf_d,
            jf_r,
            n_frames: 10,
            n_disappear: usize::from(jf_d.is_some()),
            n_reappear: usize::from(jf_r.is_some()),
        }
    }

    #[test]
    fn aggregation() {
        let one = video(0.3, 0.5, Some(0.7), None);
        let r = aggregate(&[one]).unwrap();
        assert_eq!((r.j_mean, r.f_mean, r.jf, r.jf_d, r.jf_r), (0.3, 0.5, 0.4, Some(0.7), None));
        let r = aggregate(&[video(0.4, 0.4, None, Some(0.2)), video(0.6, 0.6, Some(0.9), Some(0.4))]).unwrap();
        assert!((r.jf - 0.5).abs() < 1e-12);
        assert_eq!(r.jf_d, Some(0.9));
        assert!((r.jf_r.unwrap() - 0.3).abs() < 1e-12);
        assert_eq!(r.n_frames, 20);
    }

    #[test]
    fn percent_row_format() {
        let r = DatasetReport {
            j_mean: 0.4955,
            f_mean: 0.5280,
            jf: 0.5117,
            jf_d: Some(0.6623),
            jf_r: Some(0.3260),
            n_videos: 1,
            n_frames: 1,
            n_disappear: 0,
            n_reappear: 0,
        };
        assert_eq!(r.percent_row(), "51.17 49.55 52.80 66.23 32.60");
        let r = DatasetReport { jf_d: None, ..r };
        assert_eq!(r.percent_row(), "51.17 49.55 52.80 - 32.60");
    }
}
