//! Mines anchors for one synthetic video and compares tracking with and
//! without them.

use reanchor::anchors::{build_schedule, select_anchors, PromptSchedule, SelectionParams};
use reanchor::backends::{detect_video, JitterParams, OracleDetector, PatchEmbedder};
use reanchor::featurepool::{build_pool, score_all};
use reanchor::maskmedia::{rle_encode, CropParams, D4Transform};
use reanchor::metrics::evaluate_video;
use reanchor::synth::{generate, preset, Family};
use reanchor::tracker::{propagate, TrackerParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (frames, gt) = generate(&preset(Family::Combined, 0))?;
    let targets = gt.target_masks();
    let first = &targets[0];
    let crop = CropParams::default();
    let pool = build_pool::<f64, _>(&frames[0], first, &PatchEmbedder, &D4Transform::ALL, crop)?;
    let detector = OracleDetector::new(gt, JitterParams::default())?;
    let candidates = detect_video(&detector, &frames, first)?;
    let scored = score_all(&frames, &candidates, &pool, &PatchEmbedder, crop)?;
    let anchors = select_anchors(&scored.scores, &SelectionParams::default());

    let baseline = PromptSchedule::first_frame_only("demo", rle_encode(first));
    let mined = build_schedule("demo", rle_encode(first), anchors)?;
    for (name, schedule) in [("baseline", baseline), ("mined", mined)] {
        let track = propagate(&frames, &schedule, &detector, &PatchEmbedder, &TrackerParams::default())?;
        let m: reanchor::Metrics = evaluate_video(&track.masks()?, &targets, 2)?;
        println!("{name:>8}: {} anchors, J&F {:.3}", schedule.anchors.len(), m.jf);
    }
    Ok(())
}
