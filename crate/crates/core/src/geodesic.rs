//! Safety-aware cost map and cost-weighted multi-source shortest paths on the
//! 8-connected pixel grid.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::grid::{BinaryMask, Pixel, Raster, ScalarField, UNREACHABLE};

/// Neighbour offsets in expansion order: E, W, S, N, then the diagonals.
pub const NEIGHBORS: [(i64, i64); 8] = [
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (1, 1),
    (-1, 1),
    (1, -1),
    (-1, -1),
];

/// Truncated linear traversal penalty: `1 + λ·max(0, ρ − d)`.
///
/// Sentinel distances (no obstacle anywhere) count as outside the band.
pub fn cost_map(d_free: &ScalarField, rho_safe: f64, lambda_safe: f64) -> Result<ScalarField> {
    if !(rho_safe >= 0.0 && lambda_safe >= 0.0) {
        return Err(Error::Config(format!(
            "cost map needs rho_safe >= 0 and lambda_safe >= 0 (got {rho_safe}, {lambda_safe})"
        )));
    }
    Ok(d_free.map(|&d| {
        if d.is_finite() {
            1.0 + lambda_safe * (rho_safe - d).max(0.0)
        } else {
            1.0
        }
    }))
}

/// Predecessor link of a pixel in the shortest-path tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Link {
    Goal,
    Unreachable,
    /// Row-major index of the next pixel toward the goal.
    Next(u32),
}

/// Shortest-path tree rooted at the goal pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct PredecessorMap {
    links: Raster<Link>,
}

impl PredecessorMap {
    pub fn width(&self) -> usize {
        self.links.width()
    }

    pub fn height(&self) -> usize {
        self.links.height()
    }

    pub fn link(&self, p: Pixel) -> Link {
        *self.links.at(p)
    }

    /// Next pixel toward the goal; `None` for goal and unreachable pixels.
    pub fn next(&self, p: Pixel) -> Option<Pixel> {
        match self.link(p) {
            Link::Next(i) => Some(self.links.pixel_of(i as usize)),
            _ => None,
        }
    }

    pub fn is_goal(&self, p: Pixel) -> bool {
        self.link(p) == Link::Goal
    }

    pub fn is_reachable(&self, p: Pixel) -> bool {
        self.link(p) != Link::Unreachable
    }

    pub(crate) fn links(&self) -> &Raster<Link> {
        &self.links
    }
}

#[derive(Debug, Clone)]
pub struct GeodesicResult {
    /// Cost-weighted distance-to-go.
    pub d_weighted: ScalarField,
    pub pred: PredecessorMap,
    /// Geometric length in pixels of the tree path to the goal.
    pub d_pixel: ScalarField,
    /// Goal pixels actually used as sources.
    pub goals: Vec<Pixel>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GeodesicOptions {
    /// Permit a diagonal step between free pixels whose two shared orthogonal
    /// neighbours are both obstacles.
    pub allow_corner_cutting: bool,
}

impl Default for GeodesicOptions {
    fn default() -> Self {
        GeodesicOptions {
            allow_corner_cutting: true,
        }
    }
}

/// Priority-queue entry: smallest distance first, ties by smallest index.
#[derive(Debug, Clone, Copy)]
struct Entry {
    dist: f64,
    index: usize,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.index.cmp(&self.index))
    }
}

/// Whether the step `(dx, dy)` from `(x, y)` stays inside free space under
/// the corner-cutting rule. The target pixel itself is checked by the caller.
#[inline]
pub(crate) fn diagonal_allowed(
    free: &BinaryMask,
    x: usize,
    y: usize,
    dx: i64,
    dy: i64,
    allow: bool,
) -> bool {
    if allow || dx == 0 || dy == 0 {
        return true;
    }
    let side_a = *free.get((x as i64 + dx) as usize, y);
    let side_b = *free.get(x, (y as i64 + dy) as usize);
    side_a || side_b
}

/// Relative tolerance under which two path costs count as tied.
const TIE_TOLERANCE: f64 = 1e-12;

/// Largest plus mean distance from the line `child → goal` over the tree
/// path starting at `parent`.
fn path_bend(links: &[Link], root: &[u32], w: usize, parent: usize, child: usize) -> f64 {
    let r = root[parent] as usize;
    let (cx, cy) = ((child % w) as f64, (child / w) as f64);
    let (dx, dy) = ((r % w) as f64 - cx, (r / w) as f64 - cy);
    let len = libm::hypot(dx, dy);
    if len == 0.0 {
        return 0.0;
    }
    let mut worst: f64 = 0.0;
    let mut sum = 0.0;
    let mut n = 0.0;
    let mut p = parent;
    loop {
        let (px, py) = ((p % w) as f64 - cx, (p / w) as f64 - cy);
        let e = (px * dy - py * dx).abs() / len;
        worst = worst.max(e);
        sum += e;
        n += 1.0;
        match links[p] {
            Link::Next(q) => p = q as usize,
            _ => return worst + sum / n,
        }
    }
}

/// Multi-source Dijkstra over free pixels with edge cost
/// `½(C(p) + C(q))·‖p − q‖`.
///
/// Parents whose path costs tie within a relative 1e-12 are resolved toward
/// the straighter onward path. Goal pixels outside free space are dropped
/// with a warning. Pixels that cannot reach any goal keep the
/// [`UNREACHABLE`] sentinel.
pub fn geodesic(
    free: &BinaryMask,
    cost: &ScalarField,
    goals: &[Pixel],
    opts: GeodesicOptions,
) -> Result<GeodesicResult> {
    cost.ensure_dims(free.dims())?;
    if goals.is_empty() {
        return Err(Error::EmptyGoalSet);
    }
    let (w, h) = free.dims();
    if let Some(i) = (0..free.len()).find(|&i| {
        let c = cost.as_slice()[i];
        free.as_slice()[i] && !(c > 0.0 && c.is_finite())
    }) {
        return Err(Error::InvalidCost { x: i % w, y: i / w });
    }
    let mut sources: Vec<Pixel> = goals
        .iter()
        .copied()
        .filter(|g| {
            let ok = g.x < w && g.y < h && *free.at(*g);
            if !ok {
                log::warn!("dropping goal pixel ({}, {}) outside free space", g.x, g.y);
            }
            ok
        })
        .collect();
    sources.sort_unstable_by_key(|p| (p.y, p.x));
    sources.dedup();
    if sources.is_empty() {
        return Err(Error::NoFreeGoal(goals.len()));
    }

    let mut dist = vec![UNREACHABLE; w * h];
    let mut links = vec![Link::Unreachable; w * h];
    let mut settled = vec![false; w * h];
    let mut heap = BinaryHeap::new();
    for g in &sources {
        let i = g.y * w + g.x;
        dist[i] = 0.0;
        links[i] = Link::Goal;
        heap.push(Entry {
            dist: 0.0,
            index: i,
        });
    }

    let costs = cost.as_slice();
    let mut root: Vec<u32> = (0..(w * h) as u32).collect();
    // straightness of the current parent's path, cached per pixel
    let mut bend = vec![f64::INFINITY; w * h];
    while let Some(Entry { index, .. }) = heap.pop() {
        if settled[index] {
            continue;
        }
        settled[index] = true;
        let d = dist[index];
        let (x, y) = (index % w, index / w);
        for &(dx, dy) in &NEIGHBORS {
            let nx = x as i64 + dx;
            let ny = y as i64 + dy;
            if !free.contains(nx, ny) {
                continue;
            }
            let (nx, ny) = (nx as usize, ny as usize);
            let ni = ny * w + nx;
            if settled[ni]
                || !*free.get(nx, ny)
                || !diagonal_allowed(free, x, y, dx, dy, opts.allow_corner_cutting)
            {
                continue;
            }
            let step = if dx != 0 && dy != 0 {
                std::f64::consts::SQRT_2
            } else {
                1.0
            };
            let nd = d + 0.5 * (costs[index] + costs[ni]) * step;
            let cur = dist[ni];
            if nd < cur - TIE_TOLERANCE * nd {
                dist[ni] = nd;
                links[ni] = Link::Next(index as u32);
                root[ni] = root[index];
                bend[ni] = f64::INFINITY;
                heap.push(Entry {
                    dist: nd,
                    index: ni,
                });
            } else if nd <= cur + TIE_TOLERANCE * cur {
                // equal-cost parents: keep the one whose onward path hugs
                // the straight line to its goal
                if let Link::Next(old) = links[ni] {
                    if bend[ni].is_infinite() {
                        bend[ni] = path_bend(&links, &root, w, old as usize, ni);
                    }
                    let b = path_bend(&links, &root, w, index, ni);
                    if b < bend[ni] - TIE_TOLERANCE {
                        links[ni] = Link::Next(index as u32);
                        root[ni] = root[index];
                        bend[ni] = b;
                        dist[ni] = nd;
                    }
                }
            }
        }
    }

    let d_weighted = ScalarField::from_vec(w, h, dist)?;
    let pred = PredecessorMap {
        links: Raster::from_vec(w, h, links)?,
    };
    let d_pixel = pixel_length_from_pred(&pred, &d_weighted)?;
    Ok(GeodesicResult {
        d_weighted,
        pred,
        d_pixel,
        goals: sources,
    })
}

/// Geometric path length along the predecessor tree, computed by the
/// recursion `D(p) = ‖p − pred(p)‖ + D(pred(p))` in nondecreasing order of
/// the weighted distance.
pub fn pixel_length_from_pred(
    pred: &PredecessorMap,
    d_weighted: &ScalarField,
) -> Result<ScalarField> {
    let links = pred.links();
    d_weighted.ensure_dims(links.dims())?;
    let w = links.width();
    let dw = d_weighted.as_slice();
    let mut order: Vec<usize> = (0..links.len())
        .filter(|&i| links.as_slice()[i] != Link::Unreachable)
        .collect();
    order.sort_by(|&a, &b| dw[a].total_cmp(&dw[b]).then(a.cmp(&b)));

    let mut out = vec![UNREACHABLE; links.len()];
    for i in order {
        out[i] = match links.as_slice()[i] {
            Link::Goal => 0.0,
            Link::Next(j) => {
                let j = j as usize;
                let rest = out[j];
                if !rest.is_finite() {
                    return Err(Error::InconsistentPredecessors(i));
                }
                let step = if i % w != j % w && i / w != j / w {
                    std::f64::consts::SQRT_2
                } else {
                    1.0
                };
                step + rest
            }
            Link::Unreachable => unreachable!("filtered above"),
        };
    }
    ScalarField::from_vec(links.width(), links.height(), out)
}

/// Follows predecessor links from `start` to the goal.
pub fn backtrack(pred: &PredecessorMap, start: Pixel) -> Result<Vec<Pixel>> {
    if start.x >= pred.width() || start.y >= pred.height() || !pred.is_reachable(start) {
        return Err(Error::UnreachableStart {
            x: start.x,
            y: start.y,
        });
    }
    let limit = pred.width() * pred.height();
    let mut path = vec![start];
    let mut p = start;
    while let Some(next) = pred.next(p) {
        if path.len() > limit {
            return Err(Error::InconsistentPredecessors(p.y * pred.width() + p.x));
        }
        path.push(next);
        p = next;
    }
    Ok(path)
}
