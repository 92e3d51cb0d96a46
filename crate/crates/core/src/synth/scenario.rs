use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::maskmedia::BinaryMask;

/// Complete, seeded description of a synthetic video.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub seed: u64,
    pub width: u32,
    pub height: u32,
    pub num_frames: usize,
    pub objects: Vec<ObjectScript>,
    #[serde(default)]
    pub occluders: Vec<Occluder>,
    #[serde(default)]
    pub background: Background,
}

/// Static textured backdrop: a grey base, blocky noise of `cell`-pixel tiles
/// with per-tile offsets in `[-block_amplitude, block_amplitude]`, plus
/// per-pixel offsets in `[-pixel_amplitude, pixel_amplitude]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Background {
    pub base: [u8; 3],
    pub cell: u32,
    pub block_amplitude: u8,
    pub pixel_amplitude: u8,
}

impl Default for Background {
    fn default() -> Self {
        Self {
            base: [118, 118, 118],
            cell: 8,
            block_amplitude: 24,
            pixel_amplitude: 8,
        }
    }
}

/// Static rectangle drawn above every object.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Occluder {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
    pub color: [u8; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectScript {
    pub id: String,
    #[serde(default)]
    pub target: bool,
    pub shape: Shape,
    pub color: [u8; 3],
    #[serde(default)]
    pub marking: Option<Marking>,
    pub trajectory: Vec<Keyframe>,
    #[serde(default)]
    pub events: Vec<Event>,
}

/// Object outline in local coordinates (pixels, origin at the object centre,
/// x right, y down).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Shape {
    Ellipse { rx: f64, ry: f64 },
    /// Convex polygon, either winding.
    Polygon { vertices: Vec<[f64; 2]> },
}

/// Darker disk painted inside the object, fixed in the object's local frame
/// so it rotates with it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Marking {
    pub offset: [f64; 2],
    pub radius: f64,
    /// Multiplier applied to the (hue-shifted) body colour.
    pub shade: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Keyframe {
    pub frame: usize,
    /// `[x, y]` in pixels.
    pub center: [f64; 2],
    #[serde(default = "unit_scale")]
    pub scale: f64,
}

fn unit_scale() -> f64 {
    1.0
}

/// Scripted change over the inclusive frame range `t0..=t1`. Gradual events
/// ramp linearly from `t0` to `t1` and hold their final value afterwards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Event {
    /// Object leaves the frame.
    Offscreen { t0: usize, t1: usize },
    /// Object is hidden behind scenery.
    BehindOccluder { t0: usize, t1: usize },
    HueShift { t0: usize, t1: usize, degrees: f64 },
    /// Clockwise rotation on screen.
    Rotate { t0: usize, t1: usize, total_degrees: f64 },
    ScaleChange { t0: usize, t1: usize, factor: f64 },
}

impl Event {
    pub fn span(&self) -> (usize, usize) {
        match *self {
            Event::Offscreen { t0, t1 }
            | Event::BehindOccluder { t0, t1 }
            | Event::HueShift { t0, t1, .. }
            | Event::Rotate { t0, t1, .. }
            | Event::ScaleChange { t0, t1, .. } => (t0, t1),
        }
    }

    pub fn is_disappearance(&self) -> bool {
        matches!(self, Event::Offscreen { .. } | Event::BehindOccluder { .. })
    }

    /// 0 before `t0`, 1 from `t1` on, linear in between.
    pub fn progress(&self, frame: usize) -> f64 {
        let (t0, t1) = self.span();
        if frame < t0 {
            0.0
        } else if frame >= t1 {
            1.0
        } else {
            (frame - t0) as f64 / (t1 - t0) as f64
        }
    }

    pub fn covers(&self, frame: usize) -> bool {
        let (t0, t1) = self.span();
        (t0..=t1).contains(&frame)
    }
}

impl ObjectScript {
    pub fn hidden_at(&self, frame: usize) -> bool {
        self.events.iter().any(|e| e.is_disappearance() && e.covers(frame))
    }
}

/// Visible pixels of every instance in every frame.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub target_id: String,
    /// Indexed by frame, then instance id.
    pub frames: Vec<BTreeMap<String, BinaryMask>>,
}

impl GroundTruth {
    pub fn num_frames(&self) -> usize {
        self.frames.len()
    }

    /// Target mask per frame.
    pub fn target_masks(&self) -> Vec<BinaryMask> {
        self.frames.iter().map(|f| f[&self.target_id].clone()).collect()
    }

    pub fn instance_ids(&self) -> Vec<String> {
        self.frames.first().map(|f| f.keys().cloned().collect()).unwrap_or_default()
    }
}
