//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use flownav::grid::{BinaryMask, Raster, ScalarField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random mask with `p_true` density of `true` pixels.
pub fn random_mask(rng: &mut ChaCha8Rng, w: usize, h: usize, p_true: f64) -> BinaryMask {
    Raster::from_fn(w, h, |_, _| rng.gen_bool(p_true))
}

/// Squared distance from every pixel to the nearest `site` pixel by
/// exhaustive scan. `None` when there are no sites.
pub fn brute_force_sq_edt(sites: &BinaryMask) -> Option<Vec<f64>> {
    let (w, h) = sites.dims();
    let pts: Vec<(i64, i64)> = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .filter(|&(x, y)| *sites.get(x, y))
        .map(|(x, y)| (x as i64, y as i64))
        .collect();
    if pts.is_empty() {
        return None;
    }
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let best = pts
                .iter()
                .map(|&(sx, sy)| (sx - x).pow(2) + (sy - y).pow(2))
                .min()
                .unwrap();
            out.push(best as f64);
        }
    }
    Some(out)
}

const STEPS: [(i64, i64); 8] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, 1), (1, -1), (-1, -1)];

/// Explicit directed edge list of the 8-connected free graph with weights
/// `½(C(p)+C(q))·{1, √2}`. Without corner cutting a diagonal is dropped
/// only when both orthogonal neighbours are obstacles.
pub fn edge_list(free: &BinaryMask, cost: &ScalarField, corner_cutting: bool) -> Vec<(usize, usize, f64)> {
    let (w, h) = free.dims();
    let mut edges = Vec::new();
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            if !*free.get(x as usize, y as usize) {
                continue;
            }
            for (dx, dy) in STEPS {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 || !*free.get(nx as usize, ny as usize) {
                    continue;
                }
                if !corner_cutting
                    && dx != 0
                    && dy != 0
                    && !(*free.get((x + dx) as usize, y as usize) || *free.get(x as usize, (y + dy) as usize))
                {
                    continue;
                }
                let p = y as usize * w + x as usize;
                let q = ny as usize * w + nx as usize;
                let len = if dx != 0 && dy != 0 { 2f64.sqrt() } else { 1.0 };
                edges.push((p, q, 0.5 * (cost.as_slice()[p] + cost.as_slice()[q]) * len));
            }
        }
    }
    edges
}

/// Multi-source Bellman-Ford over the explicit edge list.
pub fn bellman_ford(free: &BinaryMask, cost: &ScalarField, goals: &[(usize, usize)], corner_cutting: bool) -> Vec<f64> {
    let (w, h) = free.dims();
    let edges = edge_list(free, cost, corner_cutting);
    let mut d = vec![f64::INFINITY; w * h];
    for &(x, y) in goals {
        if *free.get(x, y) {
            d[y * w + x] = 0.0;
        }
    }
    for _ in 0..w * h {
        let mut changed = false;
        // edges are symmetric, so relaxing q <- p covers both directions
        for &(p, q, c) in &edges {
            if d[p] + c < d[q] {
                d[q] = d[p] + c;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    d
}

/// Textbook bilinear interpolation at continuous pixel coordinates
/// `(x, y)` where cell `(i, j)` sits at `(i + 0.5, j + 0.5)`, edge-clamped.
pub fn textbook_bilinear(f: &ScalarField, u: f64, v: f64) -> f64 {
    let (w, h) = f.dims();
    let x = (u * w as f64 - 0.5).clamp(0.0, (w - 1) as f64);
    let y = (v * h as f64 - 0.5).clamp(0.0, (h - 1) as f64);
    let x1 = x.floor() as usize;
    let y1 = y.floor() as usize;
    let x2 = (x1 + 1).min(w - 1);
    let y2 = (y1 + 1).min(h - 1);
    let (tx, ty) = (x - x1 as f64, y - y1 as f64);
    let q11 = *f.get(x1, y1);
    let q21 = *f.get(x2, y1);
    let q12 = *f.get(x1, y2);
    let q22 = *f.get(x2, y2);
    q11 * (1.0 - tx) * (1.0 - ty) + q21 * tx * (1.0 - ty) + q12 * (1.0 - tx) * ty + q22 * tx * ty
}

/// 8-connected flood fill from `start`; returns the number of reached pixels.
pub fn flood_fill_count(free: &BinaryMask, start: (usize, usize)) -> usize {
    let (w, h) = free.dims();
    let mut seen = vec![false; w * h];
    let mut stack = vec![start];
    seen[start.1 * w + start.0] = true;
    let mut count = 0;
    while let Some((x, y)) = stack.pop() {
        count += 1;
        for (dx, dy) in STEPS {
            let (nx, ny) = (x as i64 + dx, y as i64 + dy);
            if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                continue;
            }
            let (nx, ny) = (nx as usize, ny as usize);
            if *free.get(nx, ny) && !seen[ny * w + nx] {
                seen[ny * w + nx] = true;
                stack.push((nx, ny));
            }
        }
    }
    count
}

/// Map from a label function with one object instance of `label` occupying
/// `bbox`, which is stamped over the labels.
pub fn map_with_object(
    w: usize,
    h: usize,
    label: u8,
    bbox: flownav::PixelBox,
    base: impl Fn(usize, usize) -> u8,
) -> flownav::SemanticMap {
    let labels = Raster::from_fn(w, h, |x, y| {
        if bbox.contains(flownav::Pixel::new(x, y)) {
            label
        } else {
            base(x, y)
        }
    });
    let center = flownav::Pixel::new((bbox.xmin + bbox.xmax) / 2, (bbox.ymin + bbox.ymax) / 2);
    flownav::SemanticMap::new(labels, vec![flownav::ObjectInstance { label, bbox, center }]).unwrap()
}

/// Nearest `true` pixel of `sites` to `(x, y)` by exhaustive scan, ties
/// broken row-major.
pub fn nearest_site(sites: &BinaryMask, x: usize, y: usize) -> Option<(usize, usize)> {
    let (w, h) = sites.dims();
    (0..h)
        .flat_map(|sy| (0..w).map(move |sx| (sx, sy)))
        .filter(|&(sx, sy)| *sites.get(sx, sy))
        .min_by_key(|&(sx, sy)| {
            let dx = sx as i64 - x as i64;
            let dy = sy as i64 - y as i64;
            (dx * dx + dy * dy, sy, sx)
        })
}

/// Generated episode as produced by the dataset tooling: scene, instruction
/// and start all derive from `seed`.
pub fn episode(seed: u64) -> (flownav::SemanticMap, flownav::LabelMapping, flownav::Annotation) {
    use flownav::scene::{gen_instruction, gen_scene, SceneSpec};
    let (map, mapping) = gen_scene(&SceneSpec::with_seed(seed)).unwrap();
    let ins = gen_instruction(&map, &mapping, seed).unwrap();
    let ann = flownav::annotate(&map, &mapping, &ins.spec, &flownav::AnnotationConfig::default(), seed).unwrap();
    (map, mapping, ann)
}
