use std::collections::{BTreeMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::color::hue_shift;
use super::{Event, GroundTruth, ObjectScript, Scenario, Shape, SynthError};
use crate::maskmedia::{BinaryMask, FrameImage};

const MAX_SIDE: u32 = 4096;

/// RNG stream reserved for the background texture; object `i` of a preset
/// draws from stream `i + 1`.
pub const BACKGROUND_STREAM: u64 = 0;

/// Per-frame pose and appearance of one object.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectState {
    pub visible: bool,
    pub center: [f64; 2],
    pub scale: f64,
    pub angle_deg: f64,
    pub hue_deg: f64,
}

pub fn object_state(obj: &ObjectScript, frame: usize) -> ObjectState {
    let (center, mut scale) = interpolate(obj, frame);
    let mut angle_deg = 0.0;
    let mut hue_deg = 0.0;
    for e in &obj.events {
        let p = e.progress(frame);
        match *e {
            Event::Rotate { total_degrees, .. } => angle_deg += p * total_degrees,
            Event::HueShift { degrees, .. } => hue_deg += p * degrees,
            Event::ScaleChange { factor, .. } => scale *= 1.0 + (factor - 1.0) * p,
            Event::Offscreen { .. } | Event::BehindOccluder { .. } => {}
        }
    }
    ObjectState {
        visible: !obj.hidden_at(frame),
        center,
        scale,
        angle_deg,
        hue_deg,
    }
}

fn interpolate(obj: &ObjectScript, frame: usize) -> ([f64; 2], f64) {
    let keys = &obj.trajectory;
    let first = keys[0];
    if frame <= first.frame {
        return (first.center, first.scale);
    }
    for pair in keys.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if frame <= b.frame {
            let t = (frame - a.frame) as f64 / (b.frame - a.frame) as f64;
            let lerp = |u: f64, v: f64| u + (v - u) * t;
            return (
                [lerp(a.center[0], b.center[0]), lerp(a.center[1], b.center[1])],
                lerp(a.scale, b.scale),
            );
        }
    }
    let last = keys[keys.len() - 1];
    (last.center, last.scale)
}

/// Largest distance from the object centre to its outline, at scale 1.
pub fn shape_extent(shape: &Shape) -> f64 {
    match shape {
        Shape::Ellipse { rx, ry } => rx.max(*ry),
        Shape::Polygon { vertices } => vertices
            .iter()
            .map(|v| (v[0] * v[0] + v[1] * v[1]).sqrt())
            .fold(0.0, f64::max),
    }
}

fn max_scale_factor(obj: &ObjectScript) -> f64 {
    obj.events
        .iter()
        .filter_map(|e| match e {
            Event::ScaleChange { factor, .. } => Some(factor.max(1.0)),
            _ => None,
        })
        .product::<f64>()
        .max(1.0)
}

fn inside_shape(shape: &Shape, x: f64, y: f64) -> bool {
    match shape {
        Shape::Ellipse { rx, ry } => (x / rx).powi(2) + (y / ry).powi(2) <= 1.0,
        Shape::Polygon { vertices } => {
            let orient = polygon_orientation(vertices);
            (0..vertices.len()).all(|i| {
                let a = vertices[i];
                let b = vertices[(i + 1) % vertices.len()];
                let cross = (b[0] - a[0]) * (y - a[1]) - (b[1] - a[1]) * (x - a[0]);
                cross * orient >= 0.0
            })
        }
    }
}

fn polygon_orientation(vertices: &[[f64; 2]]) -> f64 {
    let area2: f64 = (0..vertices.len())
        .map(|i| {
            let a = vertices[i];
            let b = vertices[(i + 1) % vertices.len()];
            a[0] * b[1] - b[0] * a[1]
        })
        .sum();
    area2.signum()
}

fn is_convex(vertices: &[[f64; 2]]) -> bool {
    let n = vertices.len();
    let orient = polygon_orientation(vertices);
    if orient == 0.0 {
        return false;
    }
    (0..n).all(|i| {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        let c = vertices[(i + 2) % n];
        let cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]);
        cross * orient >= 0.0
    })
}

pub(crate) fn validate(s: &Scenario) -> Result<(), SynthError> {
    let bad = |msg: String| Err(SynthError::InvalidScenario(msg));
    if s.num_frames < 2 {
        return bad(format!("num_frames must be at least 2, got {}", s.num_frames));
    }
    if s.width == 0 || s.height == 0 || s.width > MAX_SIDE || s.height > MAX_SIDE {
        return bad(format!("frame size {}x{} outside 1..={MAX_SIDE}", s.width, s.height));
    }
    if s.background.cell == 0 {
        return bad("background cell must be at least 1".into());
    }
    let targets = s.objects.iter().filter(|o| o.target).count();
    if targets != 1 {
        return bad(format!("exactly one target object required, found {targets}"));
    }
    let mut ids = HashSet::new();
    for o in &s.objects {
        if o.id.is_empty() || !ids.insert(o.id.as_str()) {
            return bad(format!("object id {:?} is empty or duplicated", o.id));
        }
        if o.id.contains(['/', '\\']) || o.id == "." || o.id == ".." {
            return bad(format!("object id {:?} is not a valid directory name", o.id));
        }
        match &o.shape {
            Shape::Ellipse { rx, ry } => {
                if !(rx.is_finite() && ry.is_finite() && *rx > 0.0 && *ry > 0.0) {
                    return bad(format!("{}: ellipse radii must be positive", o.id));
                }
            }
            Shape::Polygon { vertices } => {
                if vertices.len() < 3 || vertices.iter().flatten().any(|v| !v.is_finite()) || !is_convex(vertices) {
                    return bad(format!("{}: polygon must be convex with at least 3 vertices", o.id));
                }
            }
        }
        if let Some(m) = &o.marking {
            if !(m.radius.is_finite() && m.radius >= 0.0 && m.shade.is_finite() && m.shade >= 0.0)
                || m.offset.iter().any(|v| !v.is_finite())
            {
                return bad(format!("{}: invalid marking", o.id));
            }
        }
        if o.trajectory.is_empty() {
            return bad(format!("{}: trajectory needs at least one keyframe", o.id));
        }
        for pair in o.trajectory.windows(2) {
            if pair[1].frame <= pair[0].frame {
                return bad(format!("{}: keyframes must have strictly increasing frames", o.id));
            }
        }
        for k in &o.trajectory {
            if k.frame >= s.num_frames || !(k.scale.is_finite() && k.scale > 0.0) || k.center.iter().any(|v| !v.is_finite()) {
                return bad(format!("{}: invalid keyframe at frame {}", o.id, k.frame));
            }
            let reach = shape_extent(&o.shape) * k.scale * max_scale_factor(o);
            if 2.0 * reach > s.width as f64 || 2.0 * reach > s.height as f64 {
                return bad(format!("{}: object does not fit in the frame", o.id));
            }
        }
        for e in &o.events {
            let (t0, t1) = e.span();
            if t0 > t1 || t1 >= s.num_frames {
                return bad(format!("{}: event span {t0}..={t1} outside 0..{}", o.id, s.num_frames));
            }
            let ok = match *e {
                Event::HueShift { degrees, .. } => degrees.is_finite(),
                Event::Rotate { total_degrees, .. } => total_degrees.is_finite(),
                Event::ScaleChange { factor, .. } => factor.is_finite() && factor > 0.0,
                _ => true,
            };
            if !ok {
                return bad(format!("{}: invalid event parameter", o.id));
            }
        }
    }
    Ok(())
}

/// Centre clamped so the object's bounding disk stays inside the frame.
fn clamp_center(s: &Scenario, obj: &ObjectScript, center: [f64; 2], scale: f64) -> [f64; 2] {
    let reach = shape_extent(&obj.shape) * scale;
    let clamp = |v: f64, size: u32| {
        let (lo, hi) = (reach, size as f64 - reach);
        if lo > hi {
            size as f64 / 2.0
        } else {
            v.clamp(lo, hi)
        }
    };
    [clamp(center[0], s.width), clamp(center[1], s.height)]
}

fn render_background(s: &Scenario) -> FrameImage {
    let bg = s.background;
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    rng.set_stream(BACKGROUND_STREAM);
    let cells_x = s.width.div_ceil(bg.cell);
    let cells_y = s.height.div_ceil(bg.cell);
    let ba = bg.block_amplitude as i32;
    let pa = bg.pixel_amplitude as i32;
    let blocks: Vec<[i32; 3]> = (0..cells_x * cells_y)
        .map(|_| std::array::from_fn(|_| rng.random_range(-ba..=ba)))
        .collect();
    let mut img = FrameImage::filled(s.width, s.height, bg.base).expect("validated size");
    for row in 0..s.height {
        for col in 0..s.width {
            let block = blocks[((row / bg.cell) * cells_x + col / bg.cell) as usize];
            let px = std::array::from_fn(|k| {
                let fine = rng.random_range(-pa..=pa);
                (bg.base[k] as i32 + block[k] + fine).clamp(0, 255) as u8
            });
            img.put(row, col, px);
        }
    }
    img
}

/// Renders every frame and the per-instance visible masks.
///
/// Painter's order: background, objects in list order, then occluders. A
/// pixel belongs to an object when its centre `(col + 0.5, row + 0.5)`,
/// mapped into the object's local frame, lies inside the outline (boundary
/// inclusive). An instance's ground-truth mask is the set of pixels it still
/// owns after everything above it has been drawn. Objects are not drawn at
/// all while an `Offscreen` or `BehindOccluder` event is active.
pub fn generate(s: &Scenario) -> Result<(Vec<FrameImage>, GroundTruth), SynthError> {
    validate(s)?;
    let background = render_background(s);
    let (w, h) = (s.width, s.height);
    let target = s.objects.iter().find(|o| o.target).expect("validated");

    let mut frames = Vec::with_capacity(s.num_frames);
    let mut gt_frames = Vec::with_capacity(s.num_frames);
    for f in 0..s.num_frames {
        let mut img = background.clone();
        let mut owner: Vec<i32> = vec![-1; (w * h) as usize];
        for (oi, obj) in s.objects.iter().enumerate() {
            let st = object_state(obj, f);
            if !st.visible {
                continue;
            }
            let center = clamp_center(s, obj, st.center, st.scale);
            let body = hue_shift(obj.color, st.hue_deg);
            let mark_color = obj.marking.map(|m| body.map(|v| (v as f64 * m.shade).round().clamp(0.0, 255.0) as u8));
            let reach = shape_extent(&obj.shape) * st.scale + 1.0;
            let (sin, cos) = st.angle_deg.to_radians().sin_cos();
            let col0 = (center[0] - reach).floor().max(0.0) as u32;
            let col1 = ((center[0] + reach).ceil().max(0.0) as u32).min(w);
            let row0 = (center[1] - reach).floor().max(0.0) as u32;
            let row1 = ((center[1] + reach).ceil().max(0.0) as u32).min(h);
            for row in row0..row1 {
                for col in col0..col1 {
                    let dx = col as f64 + 0.5 - center[0];
                    let dy = row as f64 + 0.5 - center[1];
                    // inverse rotation into the local frame
                    let lx = (cos * dx + sin * dy) / st.scale;
                    let ly = (-sin * dx + cos * dy) / st.scale;
                    if !inside_shape(&obj.shape, lx, ly) {
                        continue;
                    }
                    let mut px = body;
                    if let (Some(m), Some(mc)) = (obj.marking, mark_color) {
                        let (mx, my) = (lx - m.offset[0], ly - m.offset[1]);
                        if mx * mx + my * my <= m.radius * m.radius {
                            px = mc;
                        }
                    }
                    img.put(row, col, px);
                    owner[(row * w + col) as usize] = oi as i32;
                }
            }
        }
        for occ in &s.occluders {
            let x1 = (occ.x.saturating_add(occ.w)).min(w);
            let y1 = (occ.y.saturating_add(occ.h)).min(h);
            for row in occ.y.min(h)..y1 {
                for col in occ.x.min(w)..x1 {
                    img.put(row, col, occ.color);
                    owner[(row * w + col) as usize] = -1;
                }
            }
        }
        let mut masks = BTreeMap::new();
        for (oi, obj) in s.objects.iter().enumerate() {
            let mut m = BinaryMask::new(w, h).expect("validated size");
            for (i, &o) in owner.iter().enumerate() {
                if o == oi as i32 {
                    m.set(i as u32 / w, i as u32 % w, true);
                }
            }
            masks.insert(obj.id.clone(), m);
        }
        if masks[&target.id].is_empty() && !target.hidden_at(f) {
            return Err(SynthError::InvalidScenario(format!(
                "target fully hidden at frame {f} outside any disappearance event"
            )));
        }
        frames.push(img);
        gt_frames.push(masks);
    }
    Ok((
        frames,
        GroundTruth {
            target_id: target.id.clone(),
            frames: gt_frames,
        },
    ))
}
