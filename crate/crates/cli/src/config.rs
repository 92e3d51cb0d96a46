//! Pipeline configuration: TOML with every key optional, unknown keys
//! rejected.

use std::path::{Path, PathBuf};

use reanchor::anchors::SelectionParams;
use reanchor::backends::JitterParams;
use reanchor::maskmedia::{CropParams, D4Transform};
use reanchor::synth::PresetDims;
use reanchor::tracker::TrackerParams;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Environment variable naming a config file when `--config` is absent.
pub const CONFIG_ENV: &str = "REANCHOR_CONFIG";

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub seed: u64,
    pub pool: PoolConfig,
    pub select: SelectConfig,
    pub tracker: TrackerConfig,
    pub metrics: MetricsConfig,
    pub synth: SynthConfig,
    pub oracle: OracleConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PoolConfig {
    pub transforms: Vec<D4Transform>,
    pub patch_side: u32,
    pub pad_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SelectConfig {
    pub k: usize,
    pub theta: f64,
    pub delta: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrackerConfig {
    pub tau_track: f64,
    pub tau_mem: f64,
    pub mem_capacity: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsConfig {
    /// Pixels; unset means `ceil(0.8%` of the frame diagonal`)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary_tol: Option<u32>,
}

/// Frame size and length for `synth` and `run --family`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub width: u32,
    pub height: u32,
    pub num_frames: usize,
}

/// Perturbation applied by the ground-truth detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct OracleConfig {
    pub radius: u32,
    pub drop_prob: f64,
}

impl Default for PoolConfig {
    fn default() -> Self {
        let crop = CropParams::default();
        Self {
            transforms: D4Transform::ALL.to_vec(),
            patch_side: crop.patch_side,
            pad_ratio: crop.pad_ratio,
        }
    }
}

impl Default for SelectConfig {
    fn default() -> Self {
        let p = SelectionParams::<f64>::default();
        Self {
            k: p.k,
            theta: p.theta_min,
            delta: p.delta,
        }
    }
}

impl Default for TrackerConfig {
    fn default() -> Self {
        let p = TrackerParams::<f64>::default();
        Self {
            tau_track: p.tau_track,
            tau_mem: p.tau_mem,
            mem_capacity: p.mem_capacity,
        }
    }
}

impl Default for SynthConfig {
    fn default() -> Self {
        let d = PresetDims::default();
        Self {
            width: d.width,
            height: d.height,
            num_frames: d.num_frames,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Usage(m));
        if !self.pool.transforms.contains(&D4Transform::Identity) {
            return bad("pool.transforms must include identity".into());
        }
        if self.pool.patch_side == 0 {
            return bad("pool.patch_side must be positive".into());
        }
        if !(self.pool.pad_ratio.is_finite() && self.pool.pad_ratio >= 0.0) {
            return bad(format!("pool.pad_ratio must be finite and non-negative, got {}", self.pool.pad_ratio));
        }
        self.selection().validate().map_err(|e| CliError::Usage(e.to_string()))?;
        self.tracker_params().validate().map_err(|e| CliError::Usage(e.to_string()))?;
        if !(0.0..=1.0).contains(&self.oracle.drop_prob) {
            return bad(format!("oracle.drop_prob must lie in [0, 1], got {}", self.oracle.drop_prob));
        }
        Ok(())
    }

    pub fn crop(&self) -> CropParams {
        CropParams {
            pad_ratio: self.pool.pad_ratio,
            patch_side: self.pool.patch_side,
        }
    }

    pub fn selection(&self) -> SelectionParams<f64> {
        SelectionParams {
            k: self.select.k,
            theta_min: self.select.theta,
            delta: self.select.delta,
        }
    }

    pub fn tracker_params(&self) -> TrackerParams<f64> {
        TrackerParams {
            tau_track: self.tracker.tau_track,
            tau_mem: self.tracker.tau_mem,
            mem_capacity: self.tracker.mem_capacity,
            crop: self.crop(),
        }
    }

    pub fn jitter(&self) -> JitterParams {
        JitterParams {
            radius: self.oracle.radius,
            drop_prob: self.oracle.drop_prob,
            seed: self.seed,
        }
    }

    pub fn preset_dims(&self) -> PresetDims {
        PresetDims {
            width: self.synth.width,
            height: self.synth.height,
            num_frames: self.synth.num_frames,
        }
    }

    pub fn boundary_tol(&self, width: u32, height: u32) -> u32 {
        self.metrics
            .boundary_tol
            .unwrap_or_else(|| reanchor::metrics::default_boundary_tol(width, height))
    }

    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("config: {e}")))
    }

    /// Reads the `config` object of a run manifest.
    pub fn from_manifest(text: &str) -> CliResult<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CliError::Usage(format!("manifest: {e}")))?;
        let config = value
            .get("config")
            .cloned()
            .ok_or_else(|| CliError::Usage("manifest has no config object".into()))?;
        serde_json::from_value(config).map_err(|e| CliError::Usage(format!("manifest config: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// Loads `explicit`, else the file named by [`CONFIG_ENV`], else defaults.
/// Files ending in `.json` are treated as run manifests.
pub fn load(explicit: Option<&Path>) -> CliResult<(PipelineConfig, Option<PathBuf>)> {
    let path = explicit
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(CONFIG_ENV).filter(|v| !v.is_empty()).map(PathBuf::from));
    let Some(path) = path else {
        return Ok((PipelineConfig::default(), None));
    };
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    let config = if path.extension().is_some_and(|e| e == "json") {
        PipelineConfig::from_manifest(&text)?
    } else {
        PipelineConfig::from_toml(&text)?
    };
    config.validate()?;
    Ok((config, Some(path)))
}
