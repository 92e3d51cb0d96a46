//! Deterministic synthetic videos with scripted disappearance,
//! transformation and distractor events, plus exact ground truth.

mod color;
mod presets;
mod render;
mod scenario;

use thiserror::Error;

pub use color::{hsv_to_rgb, hue_shift, rgb_to_hsv};
pub use presets::{preset, preset_with, Family, PresetDims, LAYOUT_STREAM};
pub use render::{generate, object_state, shape_extent, ObjectState, BACKGROUND_STREAM};
pub use scenario::{Background, Event, GroundTruth, Keyframe, Marking, ObjectScript, Occluder, Scenario, Shape};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SynthError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("unknown family {0:?} (expected baseline, disappear_reappear, transform, distractor or combined)")]
    UnknownFamily(String),
}
