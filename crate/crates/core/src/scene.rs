//! Procedural desk-scale scenes: walled rooms joined by corridors, with
//! rectangular target objects, plus templated navigation instructions.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{GoalSpec, Side};
use crate::grid::{LabelMapping, ObjectInstance, Pixel, PixelBox, Raster, SemanticMap};

pub const FLOOR: u8 = 0;
pub const WALL: u8 = 1;

/// Object categories used by the generator, as `(label, name)`.
pub const OBJECT_CATEGORIES: [(u8, &str); 10] = [
    (2, "chair"),
    (3, "table"),
    (4, "sofa"),
    (5, "bed"),
    (6, "cabinet"),
    (7, "toilet"),
    (8, "plant"),
    (9, "desk"),
    (10, "box"),
    (11, "shelf"),
];

/// Floor is free; walls and every object category are obstacles; objects
/// are targetable.
pub fn default_mapping() -> LabelMapping {
    let mut names = BTreeMap::from([(FLOOR, "floor".to_string()), (WALL, "wall".to_string())]);
    for (label, name) in OBJECT_CATEGORIES {
        names.insert(label, name.to_string());
    }
    LabelMapping {
        free_labels: [FLOOR].into(),
        obstacle_labels: std::iter::once(WALL)
            .chain(OBJECT_CATEGORIES.iter().map(|c| c.0))
            .collect(),
        targetable_labels: OBJECT_CATEGORIES.iter().map(|c| c.0).collect(),
        names,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub n_rooms: usize,
    pub n_objects: usize,
    pub corridor_width: usize,
    pub object_label_pool: Vec<u8>,
    pub seed: u64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        SceneSpec {
            width: 224,
            height: 224,
            n_rooms: 4,
            n_objects: 6,
            corridor_width: 12,
            object_label_pool: OBJECT_CATEGORIES.iter().map(|c| c.0).collect(),
            seed: 0,
        }
    }
}

impl SceneSpec {
    pub fn with_seed(seed: u64) -> Self {
        SceneSpec {
            seed,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width < 32 || self.height < 32 {
            return Err(Error::Config(format!(
                "scene must be at least 32x32 (got {}x{})",
                self.width, self.height
            )));
        }
        if self.corridor_width < 3 {
            return Err(Error::Config("corridor_width must be >= 3".into()));
        }
        if self.n_rooms == 0 {
            return Err(Error::Config("n_rooms must be >= 1".into()));
        }
        if self.n_objects > 0 && self.object_label_pool.is_empty() {
            return Err(Error::Config("object_label_pool is empty".into()));
        }
        Ok(())
    }

    /// Free margin kept around every object.
    pub fn object_clearance(&self) -> usize {
        self.corridor_width.max(6)
    }
}

const BORDER: usize = 2;
const ROOM_GAP: usize = 4;
const ATTEMPTS: usize = 2000;

fn overlaps(a: &PixelBox, b: &PixelBox, gap: usize) -> bool {
    a.xmin < b.xmax + gap && b.xmin < a.xmax + gap && a.ymin < b.ymax + gap && b.ymin < a.ymax + gap
}

fn fill(labels: &mut Raster<u8>, b: &PixelBox, value: u8) {
    for y in b.ymin..b.ymax {
        for x in b.xmin..b.xmax {
            labels.set(x, y, value);
        }
    }
}

/// Carves a straight corridor of the given width between two points that
/// share a row or a column.
fn carve_segment(labels: &mut Raster<u8>, a: (usize, usize), b: (usize, usize), width: usize) {
    let (w, h) = labels.dims();
    let lo = width / 2;
    let hi = width - lo;
    let clamp_box = |xmin: usize, ymin: usize, xmax: usize, ymax: usize| PixelBox {
        xmin: xmin.max(BORDER),
        ymin: ymin.max(BORDER),
        xmax: xmax.min(w - BORDER),
        ymax: ymax.min(h - BORDER),
    };
    let b = if a.1 == b.1 {
        let (x0, x1) = (a.0.min(b.0), a.0.max(b.0));
        clamp_box(
            x0.saturating_sub(lo),
            a.1.saturating_sub(lo),
            x1 + hi,
            a.1 + hi,
        )
    } else {
        let (y0, y1) = (a.1.min(b.1), a.1.max(b.1));
        clamp_box(
            a.0.saturating_sub(lo),
            y0.saturating_sub(lo),
            a.0 + hi,
            y1 + hi,
        )
    };
    if b.xmin < b.xmax && b.ymin < b.ymax {
        fill(labels, &b, FLOOR);
    }
}

fn center_of(b: &PixelBox) -> (usize, usize) {
    ((b.xmin + b.xmax) / 2, (b.ymin + b.ymax) / 2)
}

/// Generates a semantic map and its label mapping.
///
/// A layout whose objects cannot all be placed is discarded and redrawn from
/// the same random stream, up to a fixed number of layouts.
pub fn gen_scene(spec: &SceneSpec) -> Result<(SemanticMap, LabelMapping)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut last = None;
    let mut placed = None;
    for _ in 0..LAYOUTS {
        match try_layout(spec, &mut rng) {
            Ok(layout) => {
                placed = Some(layout);
                break;
            }
            Err(e) => last = Some(e),
        }
    }
    let (labels, instances) = match placed {
        Some(layout) => layout,
        None => return Err(last.expect("at least one layout attempt")),
    };

    let mut mapping = default_mapping();
    for &l in &spec.object_label_pool {
        if !mapping.obstacle_labels.contains(&l) {
            mapping.obstacle_labels.insert(l);
            mapping.targetable_labels.insert(l);
        }
    }
    Ok((SemanticMap::new(labels, instances)?, mapping))
}

const LAYOUTS: usize = 16;

fn try_layout(spec: &SceneSpec, rng: &mut ChaCha8Rng) -> Result<(Raster<u8>, Vec<ObjectInstance>)> {
    let (w, h) = (spec.width, spec.height);
    let mut labels = Raster::filled(w, h, WALL);

    let inner_w = w - 2 * BORDER;
    let inner_h = h - 2 * BORDER;
    let min_side = |inner: usize| (inner / 6).max(16).min(inner);
    let max_side = |inner: usize| {
        ((inner as f64 / 2.4) as usize)
            .max(min_side(inner))
            .min(inner)
    };

    let mut rooms: Vec<PixelBox> = Vec::with_capacity(spec.n_rooms);
    for k in 0..spec.n_rooms {
        let mut placed = false;
        for _ in 0..ATTEMPTS {
            let rw = rng.gen_range(min_side(inner_w)..=max_side(inner_w));
            let rh = rng.gen_range(min_side(inner_h)..=max_side(inner_h));
            let x = rng.gen_range(BORDER..=w - BORDER - rw);
            let y = rng.gen_range(BORDER..=h - BORDER - rh);
            let room = PixelBox {
                xmin: x,
                ymin: y,
                xmax: x + rw,
                ymax: y + rh,
            };
            if rooms.iter().all(|r| !overlaps(r, &room, ROOM_GAP)) {
                rooms.push(room);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::Generation(format!(
                "could not place room {k} of {} without overlap",
                spec.n_rooms
            )));
        }
    }
    for room in &rooms {
        fill(&mut labels, room, FLOOR);
    }
    for pair in rooms.windows(2) {
        let (a, b) = (center_of(&pair[0]), center_of(&pair[1]));
        if rng.gen_bool(0.5) {
            carve_segment(&mut labels, a, (b.0, a.1), spec.corridor_width);
            carve_segment(&mut labels, (b.0, a.1), b, spec.corridor_width);
        } else {
            carve_segment(&mut labels, a, (a.0, b.1), spec.corridor_width);
            carve_segment(&mut labels, (a.0, b.1), b, spec.corridor_width);
        }
    }

    let clearance = spec.object_clearance();
    let mut instances = Vec::with_capacity(spec.n_objects);
    for k in 0..spec.n_objects {
        let mut placed = false;
        for _ in 0..ATTEMPTS {
            let room = rooms[rng.gen_range(0..rooms.len())];
            let max_obj = |side: usize| (side / 3).clamp(6, 18);
            let ow = rng.gen_range(6..=max_obj(room.width()));
            let oh = rng.gen_range(6..=max_obj(room.height()));
            let need_w = ow + 2 * clearance;
            let need_h = oh + 2 * clearance;
            if need_w > room.width() || need_h > room.height() {
                continue;
            }
            let x = rng.gen_range(room.xmin + clearance..=room.xmax - clearance - ow);
            let y = rng.gen_range(room.ymin + clearance..=room.ymax - clearance - oh);
            let body = PixelBox {
                xmin: x,
                ymin: y,
                xmax: x + ow,
                ymax: y + oh,
            };
            let halo = PixelBox {
                xmin: x - clearance,
                ymin: y - clearance,
                xmax: x + ow + clearance,
                ymax: y + oh + clearance,
            };
            if halo.pixels().any(|p| *labels.at(p) != FLOOR) {
                continue;
            }
            let label = *spec
                .object_label_pool
                .choose(rng)
                .expect("pool checked non-empty");
            fill(&mut labels, &body, label);
            let (cx, cy) = center_of(&body);
            instances.push(ObjectInstance {
                label,
                bbox: body,
                center: Pixel::new(cx, cy),
            });
            placed = true;
            break;
        }
        if !placed {
            return Err(Error::Generation(format!(
                "could not place object {k} of {} with {clearance} px clearance",
                spec.n_objects
            )));
        }
    }

    Ok((labels, instances))
}

/// Action verbs of the instruction template.
pub const VERBS: [&str; 6] = [
    "Navigate to",
    "Move toward",
    "Go to",
    "Head over to",
    "Walk to",
    "Please go to",
];

const ORDINALS: [&str; 10] = [
    "first", "second", "third", "fourth", "fifth", "sixth", "seventh", "eighth", "ninth", "tenth",
];

const FROM_TOP: &str = "from the upper side";

fn side_phrase(side: Side) -> Option<&'static str> {
    match side {
        Side::None => None,
        Side::Left => Some("the left of"),
        Side::Right => Some("the right of"),
        Side::Top => Some("behind"),
        Side::Bottom => Some("in front of"),
    }
}

fn ordinal_word(rank: usize) -> String {
    ORDINALS
        .get(rank)
        .map(|s| s.to_string())
        .unwrap_or_else(|| format!("number-{}", rank + 1))
}

fn parse_ordinal(word: &str) -> Option<usize> {
    ORDINALS.iter().position(|o| *o == word).or_else(|| {
        word.strip_prefix("number-")?
            .parse::<usize>()
            .ok()?
            .checked_sub(1)
    })
}

/// Same-label instances ordered top to bottom, then left to right.
fn ranked_instances(map: &SemanticMap, label: u8) -> Vec<usize> {
    let mut idx = map.instances_with_label(label);
    idx.sort_by_key(|&i| {
        let c = map.instances[i].center;
        (c.y, c.x, i)
    });
    idx
}

/// A navigation instruction with its resolved target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instruction {
    pub text: String,
    pub verb: String,
    pub spec: GoalSpec,
}

/// Surface text for a goal spec under the fixed template grammar.
pub fn render_instruction(
    verb: &str,
    spec: &GoalSpec,
    map: &SemanticMap,
    mapping: &LabelMapping,
) -> Result<String> {
    let name = mapping.name(spec.target_label);
    let target = match spec.instance_index {
        Some(i) => {
            let rank = ranked_instances(map, spec.target_label)
                .iter()
                .position(|&j| j == i)
                .ok_or(Error::TargetNotFound {
                    label: spec.target_label,
                    index: Some(i),
                })?;
            format!("the {} {name} {FROM_TOP}", ordinal_word(rank))
        }
        None => format!("the {name}"),
    };
    Ok(match side_phrase(spec.side) {
        Some(s) => format!("{verb} {s} {target}."),
        None => format!("{verb} {target}."),
    })
}

/// Inverse of [`render_instruction`].
pub fn parse_instruction(
    text: &str,
    map: &SemanticMap,
    mapping: &LabelMapping,
) -> Result<GoalSpec> {
    let bad = |why: &str| Error::Instruction(format!("{why}: {text:?}"));
    let body = text
        .strip_suffix('.')
        .ok_or_else(|| bad("missing final period"))?;
    let rest = VERBS
        .iter()
        .filter_map(|v| body.strip_prefix(v)?.strip_prefix(' '))
        .min_by_key(|r| r.len())
        .ok_or_else(|| bad("unknown verb"))?;

    let mut side = Side::None;
    let mut rest = rest;
    for candidate in [Side::Left, Side::Right, Side::Top, Side::Bottom] {
        let phrase = side_phrase(candidate).expect("non-none side");
        if let Some(r) = rest.strip_prefix(phrase).and_then(|r| r.strip_prefix(' ')) {
            side = candidate;
            rest = r;
            break;
        }
    }
    let rest = rest
        .strip_prefix("the ")
        .ok_or_else(|| bad("missing article"))?;

    if let Some(inner) = rest
        .strip_suffix(FROM_TOP)
        .and_then(|r| r.strip_suffix(' '))
    {
        let (word, name) = inner
            .split_once(' ')
            .ok_or_else(|| bad("missing ordinal"))?;
        let rank = parse_ordinal(word).ok_or_else(|| bad("unknown ordinal"))?;
        let label = mapping
            .label_by_name(name)
            .ok_or_else(|| bad("unknown object name"))?;
        let index = *ranked_instances(map, label)
            .get(rank)
            .ok_or_else(|| bad("ordinal exceeds instance count"))?;
        Ok(GoalSpec {
            target_label: label,
            instance_index: Some(index),
            side,
        })
    } else {
        let label = mapping
            .label_by_name(rest)
            .ok_or_else(|| bad("unknown object name"))?;
        Ok(GoalSpec {
            target_label: label,
            instance_index: None,
            side,
        })
    }
}

/// Samples a verb, a targetable instance and an optional side modifier. An
/// ordinal descriptor is added whenever the label occurs more than once.
pub fn gen_instruction(
    map: &SemanticMap,
    mapping: &LabelMapping,
    seed: u64,
) -> Result<Instruction> {
    let candidates: Vec<usize> = map
        .instances
        .iter()
        .enumerate()
        .filter(|(_, inst)| mapping.targetable_labels.contains(&inst.label))
        .map(|(i, _)| i)
        .collect();
    if candidates.is_empty() {
        return Err(Error::Instruction(
            "scene has no targetable instance".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let verb = VERBS[rng.gen_range(0..VERBS.len())];
    let index = candidates[rng.gen_range(0..candidates.len())];
    let label = map.instances[index].label;
    let side = if rng.gen_bool(0.5) {
        Side::None
    } else {
        [Side::Left, Side::Right, Side::Top, Side::Bottom][rng.gen_range(0..4)]
    };
    let unique = map.instances_with_label(label).len() == 1;
    let spec = GoalSpec {
        target_label: label,
        instance_index: if unique { None } else { Some(index) },
        side,
    };
    Ok(Instruction {
        text: render_instruction(verb, &spec, map, mapping)?,
        verb: verb.to_string(),
        spec,
    })
}
