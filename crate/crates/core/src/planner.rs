//! Box-driven baseline planner: side-goal offsets, inflated box occupancy
//! and 8-connected A* on a coarse grid.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{GoalSpec, Side};
use crate::geodesic::{diagonal_allowed, NEIGHBORS};
use crate::grid::{BinaryMask, LabelMapping, NormPoint, Pixel, Raster, SemanticMap};
use crate::trajectory::{resample_polyline, Trajectory};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerConfig {
    /// Side length G of the occupancy grid.
    pub grid_size: usize,
    /// Obstacle inflation, in pixels of the source image.
    pub inflate_radius: f64,
    /// Side-goal offset in normalized units.
    pub side_offset: f64,
    pub waypoints: usize,
    pub allow_corner_cutting: bool,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            grid_size: 128,
            inflate_radius: 10.0,
            side_offset: 0.02,
            waypoints: 100,
            allow_corner_cutting: true,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_size < 1 {
            return Err(Error::Config("planner grid_size must be >= 1".into()));
        }
        if !(self.inflate_radius >= 0.0 && self.side_offset >= 0.0) {
            return Err(Error::Config(
                "planner radius and offset must be >= 0".into(),
            ));
        }
        if self.waypoints < 2 {
            return Err(Error::Config("planner waypoints must be >= 2".into()));
        }
        Ok(())
    }
}

/// Axis-aligned box in normalized image coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormBox {
    pub xmin: f64,
    pub ymin: f64,
    pub xmax: f64,
    pub ymax: f64,
}

impl NormBox {
    pub fn new(xmin: f64, ymin: f64, xmax: f64, ymax: f64) -> Result<Self> {
        let b = NormBox {
            xmin,
            ymin,
            xmax,
            ymax,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = [self.xmin, self.ymin, self.xmax, self.ymax]
            .iter()
            .all(|v| v.is_finite())
            && self.xmin < self.xmax
            && self.ymin < self.ymax;
        if ok {
            Ok(())
        } else {
            Err(Error::MalformedBox(
                self.xmin, self.ymin, self.xmax, self.ymax,
            ))
        }
    }

    pub fn center(&self) -> NormPoint {
        NormPoint::new(0.5 * (self.xmin + self.xmax), 0.5 * (self.ymin + self.ymax))
    }

    /// Pixel box of a `w×h` raster, max exclusive.
    pub fn from_pixels(b: &crate::grid::PixelBox, w: usize, h: usize) -> Self {
        NormBox {
            xmin: b.xmin as f64 / w as f64,
            ymin: b.ymin as f64 / h as f64,
            xmax: b.xmax as f64 / w as f64,
            ymax: b.ymax as f64 / h as f64,
        }
    }
}

/// Navigation goal next to a box: `δ` outside the named edge, level with the
/// given center. `Side::None` returns the center itself.
pub fn side_goal(bbox: &NormBox, center: NormPoint, side: Side, delta: f64) -> Result<NormPoint> {
    bbox.validate()?;
    let (xc, yc) = (center.u(), center.v());
    let (x, y) = match side {
        Side::None => (xc, yc),
        Side::Left => (bbox.xmin - delta, yc),
        Side::Right => (bbox.xmax + delta, yc),
        Side::Top => (xc, bbox.ymin - delta),
        Side::Bottom => (xc, bbox.ymax + delta),
    };
    Ok(NormPoint::new(x, y))
}

/// Margin in grid cells for an inflation radius given in pixels of an image
/// `image_size` pixels wide.
pub fn margin_cells(radius: f64, grid_size: usize, image_size: usize) -> usize {
    if radius <= 0.0 {
        return 0;
    }
    (radius * grid_size as f64 / image_size as f64).ceil() as usize
}

/// Rasterizes boxes onto a `G×G` grid after growing each by the configured
/// radius. A raw box covers cells `⌊xmin·G⌋ ..= ⌈xmax·G⌉ − 1`.
pub fn inflate_and_rasterize(
    boxes: &[NormBox],
    cfg: &PlannerConfig,
    image_size: usize,
) -> BinaryMask {
    let g = cfg.grid_size;
    let m = margin_cells(cfg.inflate_radius, g, image_size) as i64;
    let mut occ = BinaryMask::filled(g, g, false);
    let gi = g as i64;
    for b in boxes {
        let lo = |v: f64| (v * g as f64).floor() as i64 - m;
        let hi = |v: f64| (v * g as f64).ceil() as i64 - 1 + m;
        let (x0, x1) = (lo(b.xmin).max(0), hi(b.xmax).min(gi - 1));
        let (y0, y1) = (lo(b.ymin).max(0), hi(b.ymax).min(gi - 1));
        for y in y0..=y1 {
            for x in x0..=x1 {
                occ.set(x as usize, y as usize, true);
            }
        }
    }
    occ
}

pub fn point_to_cell(p: NormPoint, g: usize) -> Pixel {
    crate::grid::norm_to_pixel(p, g, g)
}

pub fn cell_center(c: Pixel, g: usize) -> NormPoint {
    NormPoint::new((c.x as f64 + 0.5) / g as f64, (c.y as f64 + 0.5) / g as f64)
}

/// Nearest free cell by Euclidean distance, ties broken by row-major index.
pub fn snap_to_free(occ: &BinaryMask, c: Pixel) -> Option<Pixel> {
    if !*occ.at(c) {
        return Some(c);
    }
    (0..occ.len())
        .filter(|&i| !occ.as_slice()[i])
        .map(|i| occ.pixel_of(i))
        .min_by(|a, b| {
            let da = (a.x as f64 - c.x as f64).powi(2) + (a.y as f64 - c.y as f64).powi(2);
            let db = (b.x as f64 - c.x as f64).powi(2) + (b.y as f64 - c.y as f64).powi(2);
            da.total_cmp(&db)
        })
}

/// Admissible and consistent for unit/√2 step costs.
pub fn octile(a: Pixel, b: Pixel) -> f64 {
    let dx = a.x.abs_diff(b.x) as f64;
    let dy = a.y.abs_diff(b.y) as f64;
    dx.max(dy) + (std::f64::consts::SQRT_2 - 1.0) * dx.min(dy)
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlanOutcome {
    Path {
        trajectory: Trajectory,
        cells: Vec<Pixel>,
        cost: f64,
    },
    /// No free route exists; not an error.
    Failure { reason: String },
}

impl PlanOutcome {
    pub fn trajectory(&self) -> Option<&Trajectory> {
        match self {
            PlanOutcome::Path { trajectory, .. } => Some(trajectory),
            PlanOutcome::Failure { .. } => None,
        }
    }
}

#[derive(PartialEq)]
struct Open {
    f: f64,
    g: f64,
    index: usize,
}

impl Eq for Open {}

impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Open {
    // min-heap on f, then larger g (deeper first), then index
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| self.g.total_cmp(&other.g))
            .then_with(|| other.index.cmp(&self.index))
    }
}

/// Cell-level A*: returns the cell path and its cost, or `None` when the
/// goal is not reachable. `occ` is `true` on blocked cells.
pub fn astar_cells(
    occ: &BinaryMask,
    start: Pixel,
    goal: Pixel,
    allow_corner_cutting: bool,
) -> Option<(Vec<Pixel>, f64)> {
    let free = occ.negated();
    if !*free.at(start) || !*free.at(goal) {
        return None;
    }
    let n = occ.len();
    let mut g_score = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let mut closed = vec![false; n];
    let s = occ.index(start.x, start.y);
    let t = occ.index(goal.x, goal.y);
    g_score[s] = 0.0;
    let mut open = BinaryHeap::new();
    open.push(Open {
        f: octile(start, goal),
        g: 0.0,
        index: s,
    });
    while let Some(Open { g, index, .. }) = open.pop() {
        if closed[index] || g > g_score[index] {
            continue;
        }
        if index == t {
            let mut cells = vec![occ.pixel_of(t)];
            let mut i = t;
            while i != s {
                i = parent[i];
                cells.push(occ.pixel_of(i));
            }
            cells.reverse();
            return Some((cells, g));
        }
        closed[index] = true;
        let p = occ.pixel_of(index);
        for &(dx, dy) in NEIGHBORS.iter() {
            let (nx, ny) = (p.x as i64 + dx, p.y as i64 + dy);
            if !occ.contains(nx, ny) {
                continue;
            }
            let q = Pixel::new(nx as usize, ny as usize);
            if !*free.at(q) || !diagonal_allowed(&free, p.x, p.y, dx, dy, allow_corner_cutting) {
                continue;
            }
            let j = occ.index(q.x, q.y);
            let step = if dx != 0 && dy != 0 {
                std::f64::consts::SQRT_2
            } else {
                1.0
            };
            let cand = g + step;
            if cand < g_score[j] {
                g_score[j] = cand;
                parent[j] = index;
                open.push(Open {
                    f: cand + octile(q, goal),
                    g: cand,
                    index: j,
                });
            }
        }
    }
    None
}

/// Plans between two normalized points on an occupancy grid, snapping
/// blocked endpoints to the nearest free cell.
pub fn astar(
    occ: &BinaryMask,
    start: NormPoint,
    goal: NormPoint,
    cfg: &PlannerConfig,
) -> Result<PlanOutcome> {
    cfg.validate()?;
    let g = occ.width();
    if occ.height() != g {
        return Err(Error::DimensionMismatch {
            expected: (g, g),
            actual: occ.dims(),
        });
    }
    let snap = |p| snap_to_free(occ, point_to_cell(p, g));
    let (Some(s), Some(t)) = (snap(start), snap(goal)) else {
        return Ok(PlanOutcome::Failure {
            reason: "occupancy grid has no free cell".into(),
        });
    };
    let Some((cells, cost)) = astar_cells(occ, s, t, cfg.allow_corner_cutting) else {
        return Ok(PlanOutcome::Failure {
            reason: format!(
                "no 8-connected route from cell ({}, {}) to ({}, {})",
                s.x, s.y, t.x, t.y
            ),
        });
    };
    let pts: Vec<[f64; 2]> = cells
        .iter()
        .map(|&c| cell_center(c, g).to_array())
        .collect();
    let trajectory = Trajectory::from_arrays(&resample_polyline(&pts, cfg.waypoints));
    Ok(PlanOutcome::Path {
        trajectory,
        cells,
        cost,
    })
}

/// Occupancy for a scene: inflated instance boxes plus wall cells. A cell is
/// a wall cell when the map pixel under its center is an obstacle that no
/// instance box covers. Walls are not inflated.
pub fn scene_occupancy(
    map: &SemanticMap,
    mapping: &LabelMapping,
    cfg: &PlannerConfig,
) -> Result<BinaryMask> {
    let (w, h) = map.labels.dims();
    let g = cfg.grid_size;
    let boxes: Vec<NormBox> = map
        .instances
        .iter()
        .map(|i| NormBox::from_pixels(&i.bbox, w, h))
        .collect();
    let mut occ = inflate_and_rasterize(&boxes, cfg, w);
    let free = crate::grid::extract_free(map, mapping)?;
    let in_box = Raster::from_fn(w, h, |x, y| {
        map.instances
            .iter()
            .any(|i| i.bbox.contains(Pixel::new(x, y)))
    });
    for cy in 0..g {
        for cx in 0..g {
            let p = crate::grid::norm_to_pixel(cell_center(Pixel::new(cx, cy), g), w, h);
            if !*free.at(p) && !*in_box.at(p) {
                occ.set(cx, cy, true);
            }
        }
    }
    Ok(occ)
}

/// Baseline episode: goal from the target instance box and side, then A*.
/// With no instance index the first instance of the label is used.
pub fn plan_episode(
    map: &SemanticMap,
    mapping: &LabelMapping,
    spec: &GoalSpec,
    start: NormPoint,
    cfg: &PlannerConfig,
) -> Result<PlanOutcome> {
    let (w, h) = map.labels.dims();
    let index =
        match spec.instance_index {
            Some(i) => i,
            None => *map.instances_with_label(spec.target_label).first().ok_or(
                Error::TargetNotFound {
                    label: spec.target_label,
                    index: None,
                },
            )?,
        };
    let inst = map
        .instances
        .get(index)
        .filter(|i| i.label == spec.target_label)
        .ok_or(Error::TargetNotFound {
            label: spec.target_label,
            index: spec.instance_index,
        })?;
    let bbox = NormBox::from_pixels(&inst.bbox, w, h);
    let goal = side_goal(&bbox, bbox.center(), spec.side, cfg.side_offset)?;
    let occ = scene_occupancy(map, mapping, cfg)?;
    astar(&occ, start, goal, cfg)
}
