use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use reanchor::synth::Family;

/// Mine anchors for a video object, re-prompt a memory tracker with them and
/// score the result.
///
/// Exit status: 0 success, 1 usage or configuration error, 2 data or format
/// error.
#[derive(Debug, Parser)]
#[command(name = "reanchor", version)]
pub struct Cli {
    /// TOML config file, or a manifest.json to reuse its config. Falls back
    /// to $REANCHOR_CONFIG, then built-in defaults.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a seeded synthetic video with ground truth.
    Synth(SynthArgs),
    /// Score detector candidates against the first-frame target and write a
    /// prompt schedule.
    Mine(MineArgs),
    /// Propagate the target from every anchor of a schedule.
    Track(TrackArgs),
    /// Score predicted masks against ground truth.
    Eval(EvalArgs),
    /// Mine, track both with and without mined anchors, and evaluate.
    Run(RunArgs),
    /// Re-execute the command recorded in a manifest with its config.
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// baseline, disappear_reappear, transform, distractor or combined.
    #[arg(long)]
    pub family: Family,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Receives frames/, gt/<id>/ and scenario.json.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct DetectorArgs {
    /// JSON Lines file of exported detections.
    #[arg(long, value_name = "FILE")]
    pub detections: Option<PathBuf>,
    /// Use ground-truth instance masks (`<GT_ROOT>/<id>/%05d.png`) as
    /// detections, perturbed per the `[oracle]` config.
    #[arg(long, value_name = "GT_ROOT")]
    pub oracle: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct EmbedderArgs {
    /// JSON Lines file of exported embeddings.
    #[arg(long, value_name = "FILE")]
    pub embeddings: Option<PathBuf>,
    /// Use the built-in mean-centred patch descriptor.
    #[arg(long)]
    pub patch_embed: bool,
}

#[derive(Debug, Args)]
pub struct MineArgs {
    /// Directory of `%05d.png` RGB frames.
    #[arg(long, value_name = "DIR")]
    pub frames: PathBuf,
    /// Target mask in frame 0 (grey PNG, object ≥ 128).
    #[arg(long, value_name = "PNG")]
    pub first_mask: PathBuf,
    #[command(flatten)]
    pub detector: DetectorArgs,
    #[command(flatten)]
    pub embedder: EmbedderArgs,
    /// Schedule file; scores.csv and pool.json go next to it.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Video name recorded in the schedule. Defaults to the name of the
    /// directory holding the frames directory.
    #[arg(long)]
    pub video: Option<String>,
    /// Maximum number of mined anchors [config default: 3].
    #[arg(long)]
    pub k: Option<usize>,
    /// Minimum match score for an anchor [config default: 0.5].
    #[arg(long)]
    pub theta: Option<f64>,
    /// Anchors must be more than this many frames apart [config default: 15].
    #[arg(long)]
    pub delta: Option<usize>,
    /// Overrides the config seed (oracle perturbation).
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct TrackArgs {
    /// Directory of `%05d.png` RGB frames.
    #[arg(long, value_name = "DIR")]
    pub frames: PathBuf,
    /// Schedule written by `mine`.
    #[arg(long, value_name = "FILE")]
    pub schedule: PathBuf,
    #[command(flatten)]
    pub detector: DetectorArgs,
    #[command(flatten)]
    pub embedder: EmbedderArgs,
    /// Receives pred/%05d.png and track.json.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Overrides the config seed (oracle perturbation).
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Predicted mask directory; repeat together with --gt.
    #[arg(long, value_name = "DIR", required = true)]
    pub pred: Vec<PathBuf>,
    /// Ground-truth mask directory of one object; its name labels the
    /// object and its parent (skipping a `gt` level) labels the video.
    #[arg(long, value_name = "DIR", required = true)]
    pub gt: Vec<PathBuf>,
    /// report.json or report.csv.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Boundary tolerance in pixels; default from config, else 0.8% of the
    /// frame diagonal rounded up.
    #[arg(long)]
    pub boundary_tol: Option<u32>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Synthesize videos of this family.
    #[arg(long, conflicts_with_all = ["frames", "gt"], required_unless_present = "frames")]
    pub family: Option<Family>,
    /// First video seed; later videos use consecutive seeds. Overrides the
    /// config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of synthesized videos.
    #[arg(long, default_value_t = 1, requires = "family")]
    pub videos: u64,

    /// Existing video frames.
    #[arg(long, value_name = "DIR", requires = "gt")]
    pub frames: Option<PathBuf>,
    /// Ground-truth root `<GT_ROOT>/<id>/%05d.png` for an existing video.
    #[arg(long, value_name = "GT_ROOT")]
    pub gt: Option<PathBuf>,
    /// Instance id of the target under --gt.
    #[arg(long, default_value = "target", requires = "gt")]
    pub target: String,
    /// Video name for an existing video.
    #[arg(long, requires = "frames")]
    pub video: Option<String>,
    /// Detections for an existing video; defaults to the ground-truth oracle.
    #[arg(long, value_name = "FILE", requires = "frames")]
    pub detections: Option<PathBuf>,
    /// Embeddings for an existing video; defaults to the patch descriptor.
    #[arg(long, value_name = "FILE", requires = "frames")]
    pub embeddings: Option<PathBuf>,
    /// Receives one directory per video plus report.json and report.csv.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Also write side-by-side overlay PNGs (baseline | mined).
    #[arg(long)]
    pub overlays: bool,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// manifest.json written by an earlier command.
    #[arg(long, value_name = "FILE")]
    pub manifest: PathBuf,
    /// Replaces the recorded --out.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}
