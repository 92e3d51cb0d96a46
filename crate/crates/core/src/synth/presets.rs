use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::color::hsv_to_rgb;
use super::{Background, Event, Keyframe, Marking, ObjectScript, Occluder, Scenario, Shape, SynthError};

/// Stream used for layout decisions shared by all objects (lane order,
/// distractor markings).
pub const LAYOUT_STREAM: u64 = 1 << 32;

/// Scenario families reproducing the main failure modes of single-anchor
/// propagation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// One target, no distractors, no events.
    Baseline,
    /// Target passes behind an occluder, later leaves the frame and returns.
    DisappearReappear,
    /// Target rotates by a multiple of 90° and shifts hue while visible.
    Transform,
    /// Target plus 3–4 same-shape, same-colour distractors.
    Distractor,
    /// Target leaves the frame early and returns rotated, recoloured and
    /// rescaled among three distractors, then later passes behind an occluder.
    Combined,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Baseline,
        Family::DisappearReappear,
        Family::Transform,
        Family::Distractor,
        Family::Combined,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Baseline => "baseline",
            Family::DisappearReappear => "disappear_reappear",
            Family::Transform => "transform",
            Family::Distractor => "distractor",
            Family::Combined => "combined",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = SynthError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| SynthError::UnknownFamily(s.to_string()))
    }
}

/// Frame size and length used by presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PresetDims {
    pub width: u32,
    pub height: u32,
    pub num_frames: usize,
}

impl Default for PresetDims {
    fn default() -> Self {
        Self {
            width: 128,
            height: 128,
            num_frames: 120,
        }
    }
}

pub fn preset(family: Family, seed: u64) -> Scenario {
    preset_with(family, seed, PresetDims::default())
}

/// Builds a seeded scenario.
///
/// Parameter ranges (N = number of frames, W = width):
/// - shape: ellipse with `rx ∈ [10.5, 12.5]`, `ry ∈ [6, 7.5]`, shared by all
///   objects of a video;
/// - colour: HSV with any hue, `s ∈ [0.7, 0.9]`, `v ∈ [0.8, 0.95]`, shared by
///   all objects;
/// - marking: shade 0.35; the target's has radius `0.5·ry` at `(0.5·rx, 0)`,
///   distractors draw without replacement from a centred disk (radius
///   `0.5·ry` or `0.7·ry`) and diagonal disks at `±(0.35·rx, 0.35·ry)`;
/// - motion: one horizontal lane per object, moving linearly between
///   `x ∈ [0.2W, 0.35W]` and `x ∈ [0.65W, 0.8W]` in a random direction;
/// - transform events: rotation by 90°, 180° or 270°, hue shift in
///   `[60°, 90°]`, scale factor in `[0.9, 1.1]` (combined only).
pub fn preset_with(family: Family, seed: u64, dims: PresetDims) -> Scenario {
    let n = dims.num_frames;
    let mut layout = stream(seed, LAYOUT_STREAM);
    let mut target_rng = stream(seed, 1);

    let rx = target_rng.random_range(10.5..=12.5);
    let ry = target_rng.random_range(6.0..=7.5);
    let color = hsv_to_rgb(
        target_rng.random_range(0.0..360.0),
        target_rng.random_range(0.7..=0.9),
        target_rng.random_range(0.8..=0.95),
    );
    let shape = Shape::Ellipse { rx, ry };
    let marking_at = |offset: [f64; 2], radius: f64| Marking {
        offset,
        radius: radius * ry,
        shade: 0.35,
    };

    let num_distractors = match family {
        Family::Distractor => layout.random_range(3..=4),
        Family::Combined => 3,
        _ => 0,
    };
    let num_objects = 1 + num_distractors;
    let mut lanes: Vec<usize> = (0..num_objects).collect();
    shuffle(&mut lanes, &mut layout);
    let lane_h = dims.height as f64 / num_objects as f64;
    let lane_y = |lane: usize| (lane as f64 + 0.5) * lane_h;

    // (offset, radius / ry); none lies in the orbit of the target's marking
    // once the crop is squashed to a square patch
    let mut distractor_markings = vec![
        ([0.0, 0.0], 0.5),
        ([0.35 * rx, 0.35 * ry], 0.5),
        ([-0.35 * rx, -0.35 * ry], 0.5),
        ([0.0, 0.0], 0.7),
    ];
    shuffle(&mut distractor_markings, &mut layout);

    let mut objects = Vec::with_capacity(num_objects);
    objects.push(ObjectScript {
        id: "target".into(),
        target: true,
        shape: shape.clone(),
        color,
        marking: Some(marking_at([0.5 * rx, 0.0], 0.5)),
        trajectory: lane_trajectory(&mut target_rng, dims, lane_y(lanes[0])),
        events: Vec::new(),
    });
    for d in 0..num_distractors {
        let mut rng = stream(seed, 2 + d as u64);
        let (offset, radius) = distractor_markings[d % distractor_markings.len()];
        objects.push(ObjectScript {
            id: format!("d{}", d + 1),
            target: false,
            shape: shape.clone(),
            color,
            marking: Some(marking_at(offset, radius)),
            trajectory: lane_trajectory(&mut rng, dims, lane_y(lanes[d + 1])),
            events: Vec::new(),
        });
    }

    let mut occluders = Vec::new();
    let at = |x: f64| frame_at(n, x);
    let target_lane_top = (lanes[0] as f64 * lane_h).floor() as u32;
    let mut events = Vec::new();
    match family {
        Family::Baseline | Family::Distractor => {}
        Family::DisappearReappear => {
            let (occ, hide) = occluder_crossing(&objects[0], at(0.35), target_lane_top, lane_h, n);
            occluders.push(occ);
            events.extend(hide);
            events.push(Event::Offscreen {
                t0: at(0.62),
                t1: at(0.75),
            });
        }
        Family::Transform => {
            let (t0, t1) = (at(0.35), at(0.6));
            events.push(Event::Rotate {
                t0,
                t1,
                total_degrees: 90.0 * target_rng.random_range(1..=3) as f64,
            });
            events.push(Event::HueShift {
                t0,
                t1,
                degrees: target_rng.random_range(60.0..=90.0),
            });
        }
        Family::Combined => {
            let t0 = at(0.07) + target_rng.random_range(0..=2);
            let t1 = at(0.3);
            events.push(Event::Offscreen { t0, t1 });
            let (r0, r1) = ((t0 + 1).min(t1), t1.saturating_sub(1).max(t0));
            events.push(Event::Rotate {
                t0: r0,
                t1: r1,
                total_degrees: 90.0 * target_rng.random_range(1..=3) as f64,
            });
            events.push(Event::HueShift {
                t0: r0,
                t1: r1,
                degrees: target_rng.random_range(60.0..=90.0),
            });
            events.push(Event::ScaleChange {
                t0: r0,
                t1: r1,
                factor: target_rng.random_range(0.9..=1.1),
            });
            let (occ, hide) = occluder_crossing(&objects[0], at(0.8), target_lane_top, lane_h, n);
            occluders.push(occ);
            events.extend(hide);
        }
    }
    objects[0].events = events;

    Scenario {
        seed,
        width: dims.width,
        height: dims.height,
        num_frames: n,
        objects,
        occluders,
        background: Background::default(),
    }
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn shuffle<T>(items: &mut [T], rng: &mut ChaCha8Rng) {
    for i in (1..items.len()).rev() {
        let j = rng.random_range(0..=i);
        items.swap(i, j);
    }
}

fn frame_at(n: usize, fraction: f64) -> usize {
    (n.saturating_sub(1) as f64 * fraction).round() as usize
}

fn lane_trajectory(rng: &mut ChaCha8Rng, dims: PresetDims, y: f64) -> Vec<Keyframe> {
    let w = dims.width as f64;
    let mut xa = rng.random_range(0.2 * w..=0.35 * w);
    let mut xb = rng.random_range(0.65 * w..=0.8 * w);
    if rng.random_bool(0.5) {
        std::mem::swap(&mut xa, &mut xb);
    }
    let last = dims.num_frames.saturating_sub(1).max(1);
    vec![
        Keyframe {
            frame: 0,
            center: [xa, y],
            scale: 1.0,
        },
        Keyframe {
            frame: last,
            center: [xb, y],
            scale: 1.0,
        },
    ]
}

/// Places a 12-pixel-wide occluder over the object's position at
/// `at_frame` and hides the object for every frame whose centre lies within
/// the occluder's columns.
fn occluder_crossing(
    obj: &ObjectScript,
    at_frame: usize,
    lane_top: u32,
    lane_h: f64,
    n: usize,
) -> (Occluder, Option<Event>) {
    const WIDTH: f64 = 12.0;
    let x_at = |f: usize| super::render::object_state(obj, f).center[0];
    let cx = x_at(at_frame);
    let x0 = (cx - WIDTH / 2.0).round().max(0.0);
    let occ = Occluder {
        x: x0 as u32,
        y: lane_top,
        w: WIDTH as u32,
        h: lane_h.floor() as u32,
        color: [58, 58, 64],
    };
    let hidden: Vec<usize> = (0..n)
        .filter(|&f| {
            let x = x_at(f);
            x >= x0 && x <= x0 + WIDTH
        })
        .collect();
    let event = match (hidden.first(), hidden.last()) {
        (Some(&t0), Some(&t1)) => Some(Event::BehindOccluder { t0, t1 }),
        _ => None,
    };
    (occ, event)
}
