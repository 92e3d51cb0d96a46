use std::path::{Path, PathBuf};
use std::time::Instant;

use reanchor::anchors::PromptSchedule;
use reanchor::backends::{JitterParams, OracleDetector};
use reanchor::maskmedia::{BinaryMask, FrameImage};
use reanchor::metrics::{aggregate, VideoMetrics};
use reanchor::synth::{generate, preset_with, Family, GroundTruth};

use crate::cli::{DetectorArgs, EmbedderArgs, EvalArgs, MineArgs, RunArgs, SynthArgs, TrackArgs};
use crate::config::PipelineConfig;
use crate::error::{CliError, CliResult};
use crate::formats::{Report, ReportRow, RunManifest, ScheduleFile, FORMAT_VERSION, MANIFEST_FILE};
use crate::io;
use crate::pipeline::{self, DynDetector, DynEmbedder};

/// Collects timings and warnings; warnings are echoed to stderr as they
/// arrive.
struct Log {
    manifest: RunManifest,
}

impl Log {
    fn new(command: &str, args: &[String], config: &PipelineConfig) -> Self {
        Self {
            manifest: RunManifest::new(command, args, config),
        }
    }

    fn time<R>(&mut self, stage: &str, f: impl FnOnce(&mut Self) -> CliResult<R>) -> CliResult<R> {
        let start = Instant::now();
        let out = f(self);
        *self.manifest.timings_ms.entry(stage.to_string()).or_default() += start.elapsed().as_millis() as u64;
        out
    }

    fn warn(&mut self, w: impl Into<String>) {
        let w = w.into();
        eprintln!("warning: {w}");
        self.manifest.warnings.push(w);
    }

    fn finish(self, dir: &Path) -> CliResult<()> {
        io::write_json(&dir.join(MANIFEST_FILE), &self.manifest)
    }
}

fn parent_dir(path: &Path) -> &Path {
    path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."))
}

fn detector(args: &DetectorArgs, num_frames: usize, config: &PipelineConfig, log: &mut Log) -> CliResult<DynDetector> {
    match (&args.detections, &args.oracle) {
        (Some(p), _) => {
            log.manifest.input("detections", p);
            pipeline::file_detector(p)
        }
        (None, Some(root)) => {
            log.manifest.input("oracle", root);
            pipeline::oracle_detector(root, num_frames, config)
        }
        (None, None) => Err(CliError::Usage("one of --detections or --oracle is required".into())),
    }
}

fn embedder(args: &EmbedderArgs, log: &mut Log) -> CliResult<DynEmbedder> {
    if let Some(p) = &args.embeddings {
        log.manifest.input("embeddings", p);
    }
    pipeline::embedder(args.embeddings.as_deref())
}

pub fn synth(a: &SynthArgs, mut config: PipelineConfig, raw: &[String]) -> CliResult<()> {
    if let Some(s) = a.seed {
        config.seed = s;
    }
    let mut log = Log::new("synth", raw, &config);
    let scenario = preset_with(a.family, config.seed, config.preset_dims());
    log.time("synth", |_| write_synth(&a.out, &scenario, &generate(&scenario)?))?;
    log.finish(&a.out)?;
    println!("{}: {} frames", a.out.display(), scenario.num_frames);
    Ok(())
}

fn write_synth(out: &Path, scenario: &reanchor::synth::Scenario, video: &(Vec<FrameImage>, GroundTruth)) -> CliResult<()> {
    let (frames, gt) = video;
    io::write_frames(&out.join("frames"), frames)?;
    for id in gt.instance_ids() {
        let masks: Vec<BinaryMask> = gt.frames.iter().map(|f| f[&id].clone()).collect();
        io::write_masks(&out.join("gt").join(&id), &masks)?;
    }
    let mut value = serde_json::to_value(scenario)?;
    value
        .as_object_mut()
        .expect("scenario is an object")
        .insert("format_version".into(), FORMAT_VERSION.into());
    io::write_json(&out.join("scenario.json"), &value)
}

pub fn mine(a: &MineArgs, mut config: PipelineConfig, raw: &[String]) -> CliResult<()> {
    if let Some(s) = a.seed {
        config.seed = s;
    }
    if let Some(k) = a.k {
        config.select.k = k;
    }
    if let Some(t) = a.theta {
        config.select.theta = t;
    }
    if let Some(d) = a.delta {
        config.select.delta = d;
    }
    config.validate()?;
    let mut log = Log::new("mine", raw, &config);
    log.manifest.input("frames", &a.frames);
    log.manifest.input("first_mask", &a.first_mask);

    let frames = log.time("read", |_| io::read_frames(&a.frames))?;
    let first = io::read_mask(&a.first_mask)?;
    let det = detector(&a.detector, frames.len(), &config, &mut log)?;
    let emb = embedder(&a.embedder, &mut log)?;
    let video = a.video.clone().unwrap_or_else(|| pipeline::video_name(&a.frames));

    let mined = log.time("mine", |_| pipeline::mine(&video, &frames, &first, &*det, &*emb, &config))?;
    for w in &mined.warnings {
        log.warn(w.clone());
    }
    pipeline::write_mined(&a.out, &mined)?;
    log.finish(parent_dir(&a.out))?;
    let frames: Vec<String> = mined.schedule.mined().map(|a| a.frame_idx.to_string()).collect();
    println!("{video}: {} mined anchor(s) [{}]", frames.len(), frames.join(", "));
    Ok(())
}

pub fn track(a: &TrackArgs, mut config: PipelineConfig, raw: &[String]) -> CliResult<()> {
    if let Some(s) = a.seed {
        config.seed = s;
    }
    let mut log = Log::new("track", raw, &config);
    log.manifest.input("frames", &a.frames);
    log.manifest.input("schedule", &a.schedule);

    let frames = log.time("read", |_| io::read_frames(&a.frames))?;
    let schedule = ScheduleFile::load(&a.schedule)?;
    let det = detector(&a.detector, frames.len(), &config, &mut log)?;
    let emb = embedder(&a.embedder, &mut log)?;

    let result = log.time("track", |_| pipeline::track(&frames, &schedule, &*det, &*emb, &config))?;
    pipeline::write_track(&a.out, &schedule.video_id, &result)?;
    log.finish(&a.out)?;
    let matched = result.frames.iter().filter(|t| !t.mask.is_empty()).count();
    println!("{}: {matched}/{} frames with a mask", schedule.video_id, result.len());
    Ok(())
}

/// `(video, object)` labels of a ground-truth mask directory.
fn eval_labels(gt: &Path) -> (String, String) {
    let abs = gt.canonicalize().unwrap_or_else(|_| gt.to_path_buf());
    let name = |p: Option<&Path>| {
        p.and_then(Path::file_name)
            .map(|n| n.to_string_lossy().into_owned())
    };
    let object = name(Some(&abs)).unwrap_or_else(|| "object".into());
    let mut parent = abs.parent();
    if name(parent).as_deref() == Some("gt") {
        parent = parent.and_then(Path::parent);
    }
    (name(parent).unwrap_or_else(|| "video".into()), object)
}

/// Reads a prediction directory that must align with `n` ground-truth frames.
fn read_pred(dir: &Path, n: usize) -> CliResult<Vec<BinaryMask>> {
    let found = io::sequence_len(dir)?;
    if found > n {
        return Err(CliError::Data(format!(
            "{}: {found} predicted frames for {n} ground-truth frames",
            dir.display()
        )));
    }
    io::read_masks(dir, n)
}

pub fn eval(a: &EvalArgs, mut config: PipelineConfig, raw: &[String]) -> CliResult<()> {
    if a.pred.len() != a.gt.len() {
        return Err(CliError::Usage(format!(
            "{} --pred but {} --gt directories",
            a.pred.len(),
            a.gt.len()
        )));
    }
    Report::check_path(&a.out)?;
    if a.boundary_tol.is_some() {
        config.metrics.boundary_tol = a.boundary_tol;
    }
    let mut log = Log::new("eval", raw, &config);
    let mut rows = Vec::new();
    let mut metrics = Vec::new();
    let mut tolerances = Vec::new();
    for (i, (pred_dir, gt_dir)) in a.pred.iter().zip(&a.gt).enumerate() {
        log.manifest.input(&format!("pred[{i}]"), pred_dir);
        log.manifest.input(&format!("gt[{i}]"), gt_dir);
        let m = log.time("eval", |_| {
            let gt = io::read_mask_sequence(gt_dir)?;
            let pred = read_pred(pred_dir, gt.len())?;
            let tol = config.boundary_tol(gt[0].width(), gt[0].height());
            tolerances.push(tol);
            pipeline::evaluate(&pred, &gt, tol)
        })?;
        let (video, object) = eval_labels(gt_dir);
        rows.push(ReportRow::video(&video, &object, None, &m));
        metrics.push(m);
    }
    let summary = aggregate(&metrics)?;
    rows.push(ReportRow::summary(None, &summary));
    Report::new(&tolerances, rows).write(&a.out)?;
    log.finish(parent_dir(&a.out))?;
    println!("J&F J F J&F_d J&F_r");
    println!("{}", summary.percent_row());
    Ok(())
}

/// Inputs of one video for `run`.
struct VideoInput {
    name: String,
    frames: Vec<FrameImage>,
    gt: Vec<BinaryMask>,
    detector: DynDetector,
    embedder: DynEmbedder,
}

const MODES: [&str; 2] = ["baseline", "mined"];

pub fn run(a: &RunArgs, mut config: PipelineConfig, raw: &[String]) -> CliResult<()> {
    if let Some(s) = a.seed {
        config.seed = s;
    }
    let mut log = Log::new("run", raw, &config);
    io::create_dir(&a.out)?;

    let mut per_mode: [Vec<VideoMetrics<f64>>; 2] = Default::default();
    let mut rows = Vec::new();
    let mut tolerances = Vec::new();
    let mut run_video = |input: VideoInput, log: &mut Log| -> CliResult<()> {
        let dir = a.out.join(&input.name);
        let tol = config.boundary_tol(input.gt[0].width(), input.gt[0].height());
        tolerances.push(tol);
        let results = run_one(&dir, &input, &config, a.overlays, log)?;
        for (m, (mode, metrics)) in MODES.iter().zip(results).enumerate() {
            rows.push(ReportRow::video(&input.name, "target", Some(mode), &metrics));
            per_mode[m].push(metrics);
        }
        Ok(())
    };

    match (&a.family, &a.frames, &a.gt) {
        (Some(family), _, _) => {
            for i in 0..a.videos {
                let seed = config.seed.wrapping_add(i);
                let input = log.time("synth", |_| synth_video(*family, seed, &config, &a.out))?;
                run_video(input, &mut log)?;
            }
        }
        (None, Some(frames_dir), Some(gt_root)) => {
            log.manifest.input("frames", frames_dir);
            log.manifest.input("gt", gt_root);
            let frames = log.time("read", |_| io::read_frames(frames_dir))?;
            let target = gt_root.join(&a.target);
            let gt = io::read_masks(&target, frames.len())?;
            let detector = match &a.detections {
                Some(p) => {
                    log.manifest.input("detections", p);
                    pipeline::file_detector(p)?
                }
                None => pipeline::oracle_detector(gt_root, frames.len(), &config)?,
            };
            if let Some(p) = &a.embeddings {
                log.manifest.input("embeddings", p);
            }
            let input = VideoInput {
                name: a.video.clone().unwrap_or_else(|| pipeline::video_name(frames_dir)),
                frames,
                gt,
                detector,
                embedder: pipeline::embedder(a.embeddings.as_deref())?,
            };
            run_video(input, &mut log)?;
        }
        _ => return Err(CliError::Usage("run needs --family, or --frames with --gt".into())),
    }

    for (m, mode) in MODES.iter().enumerate() {
        rows.push(ReportRow::summary(Some(mode), &aggregate(&per_mode[m])?));
    }
    let report = Report::new(&tolerances, rows);
    report.write(&a.out.join("report.json"))?;
    report.write(&a.out.join("report.csv"))?;
    log.finish(&a.out)?;

    println!("{:<9} J&F J F J&F_d J&F_r", "mode");
    for (m, mode) in MODES.iter().enumerate() {
        println!("{mode:<9} {}", aggregate(&per_mode[m])?.percent_row());
    }
    Ok(())
}

fn synth_video(family: Family, seed: u64, config: &PipelineConfig, out: &Path) -> CliResult<VideoInput> {
    let scenario = preset_with(family, seed, config.preset_dims());
    let video = generate(&scenario)?;
    let name = format!("{family}_{seed:04}");
    write_synth(&out.join(&name), &scenario, &video)?;
    let (frames, gt) = video;
    let jitter = JitterParams {
        seed,
        ..config.jitter()
    };
    Ok(VideoInput {
        name,
        gt: gt.target_masks(),
        detector: Box::new(OracleDetector::new(gt, jitter)?),
        embedder: pipeline::embedder(None)?,
        frames,
    })
}

/// Mines, tracks both modes, writes their outputs under `dir` and returns
/// the metrics of each mode in [`MODES`] order.
fn run_one(
    dir: &Path,
    v: &VideoInput,
    config: &PipelineConfig,
    overlays: bool,
    log: &mut Log,
) -> CliResult<[VideoMetrics<f64>; 2]> {
    let first = &v.gt[0];
    let mined = log.time("mine", |_| pipeline::mine(&v.name, &v.frames, first, &*v.detector, &*v.embedder, config))?;
    for w in &mined.warnings {
        log.warn(w.clone());
    }
    pipeline::write_mined(&dir.join("schedule.json"), &mined)?;

    let baseline = PromptSchedule::first_frame_only(&v.name, mined.schedule.anchors[0].mask.clone());
    let schedules = [&baseline, &mined.schedule];
    let mut preds: Vec<Vec<BinaryMask>> = Vec::with_capacity(2);
    let mut metrics = Vec::with_capacity(2);
    for (mode, schedule) in MODES.iter().zip(schedules) {
        let result = log.time("track", |_| pipeline::track(&v.frames, schedule, &*v.detector, &*v.embedder, config))?;
        let masks = pipeline::write_track(&dir.join(mode), &v.name, &result)?;
        let tol = config.boundary_tol(first.width(), first.height());
        metrics.push(log.time("eval", |_| pipeline::evaluate(&masks, &v.gt, tol))?);
        preds.push(masks);
    }

    if overlays {
        let written = log.time("overlays", |_| {
            let dir = dir.join("overlays");
            io::create_dir(&dir)?;
            for (f, frame) in v.frames.iter().enumerate() {
                let img = pipeline::overlay_pair(
                    frame,
                    &v.gt[f],
                    (&preds[0][f], baseline.anchor_at(f).is_some()),
                    (&preds[1][f], mined.schedule.anchor_at(f).is_some()),
                );
                io::write_frame(&io::frame_path(&dir, f), &img)?;
            }
            Ok(())
        });
        if let Err(e) = written {
            log.warn(format!("{}: overlays skipped: {e}", v.name));
        }
    }
    Ok([metrics[0], metrics[1]])
}

/// Command line recorded in `manifest`, rewritten to use the manifest's
/// config and optionally a new output path.
pub fn replay_args(manifest: &RunManifest, manifest_path: &Path, out: Option<&PathBuf>) -> Vec<String> {
    let mut args = Vec::with_capacity(manifest.args.len() + 2);
    let mut iter = manifest.args.iter();
    while let Some(arg) = iter.next() {
        match arg.as_str() {
            "--config" => {
                iter.next();
            }
            s if s.starts_with("--config=") => {}
            "--out" if out.is_some() => {
                iter.next();
                args.push("--out".to_string());
                args.push(out.unwrap().display().to_string());
            }
            s if s.starts_with("--out=") && out.is_some() => {
                args.push(format!("--out={}", out.unwrap().display()));
            }
            _ => args.push(arg.clone()),
        }
    }
    args.push("--config".to_string());
    args.push(manifest_path.display().to_string());
    args
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_skip_gt_level() {
        let dir = tempfile::tempdir().unwrap();
        let gt = dir.path().join("vid").join("gt").join("target");
        std::fs::create_dir_all(&gt).unwrap();
        assert_eq!(eval_labels(&gt), ("vid".to_string(), "target".to_string()));
        let other = dir.path().join("vid2").join("obj");
        std::fs::create_dir_all(&other).unwrap();
        assert_eq!(eval_labels(&other), ("vid2".to_string(), "obj".to_string()));
    }

    #[test]
    fn replay_rewrites_config_and_out() {
        let mut m = RunManifest::new(
            "run",
            &["run", "--config", "a.toml", "--family", "baseline", "--out", "old"].map(String::from),
            &PipelineConfig::default(),
        );
        let new = PathBuf::from("new");
        let args = replay_args(&m, Path::new("m.json"), Some(&new));
        assert_eq!(args, ["run", "--family", "baseline", "--out", "new", "--config", "m.json"]);
        m.args = vec!["run".into(), "--out=old".into()];
        assert_eq!(replay_args(&m, Path::new("m.json"), None), ["run", "--out=old", "--config", "m.json"]);
    }
}
