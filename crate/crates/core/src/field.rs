//! Procedural annotation: from a semantic map and a target to a
//! goal-conditioned flow field and a reference trajectory.
//!
//! The pipeline runs six stages:
//!
//! 1. free-space mask and goal sources (a thin free band around the target),
//! 2. distance-to-obstacle, safety cost map, cost-weighted geodesic distance
//!    with its predecessor tree and the pixel distance-to-go along that tree,
//! 3. distance-to-free inside obstacles,
//! 4. a piecewise potential that is the geodesic distance in free space and a
//!    steep ramp shifted above every free value inside obstacles,
//! 5. the flow field: the negated, normalized gradient of the smoothed
//!    potential, scaled by the remaining pixel distance in free space and
//!    kept at unit speed inside obstacles,
//! 6. a reachable start, the predecessor backtrack, and arc-length
//!    resampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::edt::{dtf, dto};
use crate::error::{Error, Result, Stage};
use crate::geodesic::{backtrack, cost_map, geodesic, GeodesicOptions, GeodesicResult};
use crate::grid::{
    extract_free, BinaryMask, FlowFieldGrid, LabelMapping, Pixel, Raster, ScalarField, SemanticMap,
    EPSILON,
};
use crate::trajectory::{resample_polyline, Trajectory};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnotationConfig {
    /// Safety band radius in pixels.
    pub rho_safe: f64,
    /// Penalty slope inside the safety band.
    pub lambda_safe: f64,
    /// Potential weight of the geodesic distance in free space.
    pub w_g: f64,
    /// Potential weight of the distance-to-free inside obstacles.
    pub w_obs: f64,
    /// Gaussian smoothing of the potential, in pixels. Kernel truncated at 3σ.
    pub gaussian_sigma: f64,
    /// Chebyshev width of the goal band around the target, in pixels.
    pub goal_band: usize,
    pub start_min_goal_dist: f64,
    pub start_min_obs_dist: f64,
    pub traj_waypoints: usize,
    pub epsilon: f64,
    pub allow_corner_cutting: bool,
}

impl Default for AnnotationConfig {
    fn default() -> Self {
        AnnotationConfig {
            rho_safe: 50.0,
            lambda_safe: 1.0,
            w_g: 1.0,
            w_obs: 10.0,
            gaussian_sigma: 1.5,
            goal_band: 2,
            start_min_goal_dist: 20.0,
            start_min_obs_dist: 3.0,
            traj_waypoints: 100,
            epsilon: EPSILON,
            allow_corner_cutting: true,
        }
    }
}

impl AnnotationConfig {
    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("rho_safe", self.rho_safe),
            ("lambda_safe", self.lambda_safe),
            ("w_g", self.w_g),
            ("w_obs", self.w_obs),
            ("gaussian_sigma", self.gaussian_sigma),
            ("start_min_goal_dist", self.start_min_goal_dist),
            ("start_min_obs_dist", self.start_min_obs_dist),
            ("epsilon", self.epsilon),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!(
                    "{name} must be finite and >= 0 (got {v})"
                )));
            }
        }
        if self.traj_waypoints < 2 {
            return Err(Error::Config("traj_waypoints must be >= 2".into()));
        }
        if self.w_obs <= self.w_g {
            return Err(Error::Config(format!(
                "w_obs ({}) must exceed w_g ({})",
                self.w_obs, self.w_g
            )));
        }
        Ok(())
    }

    pub fn geodesic_options(&self) -> GeodesicOptions {
        GeodesicOptions {
            allow_corner_cutting: self.allow_corner_cutting,
        }
    }
}

/// Side of the target the agent should approach.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    #[default]
    None,
    Left,
    Right,
    Top,
    Bottom,
}

impl Side {
    pub const ALL: [Side; 5] = [Side::None, Side::Left, Side::Right, Side::Top, Side::Bottom];

    pub fn as_str(&self) -> &'static str {
        match self {
            Side::None => "none",
            Side::Left => "left",
            Side::Right => "right",
            Side::Top => "top",
            Side::Bottom => "bottom",
        }
    }
}

impl std::str::FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Side::ALL
            .into_iter()
            .find(|side| side.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown side {s:?}")))
    }
}

/// Machine-readable navigation target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoalSpec {
    pub target_label: u8,
    /// Index into [`SemanticMap::instances`]. `None` targets every instance
    /// of the label at once.
    #[serde(default)]
    pub instance_index: Option<usize>,
    #[serde(default)]
    pub side: Side,
}

/// Annotated flow field and reference trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Annotation {
    pub field: FlowFieldGrid,
    pub trajectory: Trajectory,
    pub goal_pixels: Vec<Pixel>,
    pub start: Pixel,
}

/// Intermediate rasters of one annotation run.
#[derive(Debug, Clone)]
pub struct AnnotationStages {
    pub free: BinaryMask,
    pub d_free: ScalarField,
    pub cost: ScalarField,
    pub geodesic: GeodesicResult,
    pub d_obs: ScalarField,
    pub potential: Potential,
    /// Raw pixel polyline before resampling.
    pub raw_path: Vec<Pixel>,
}

fn target_instances(
    map: &SemanticMap,
    mapping: &LabelMapping,
    spec: &GoalSpec,
) -> Result<Vec<usize>> {
    if !mapping.targetable_labels.contains(&spec.target_label) {
        return Err(Error::NotTargetable(spec.target_label));
    }
    let not_found = || Error::TargetNotFound {
        label: spec.target_label,
        index: spec.instance_index,
    };
    match spec.instance_index {
        Some(i) => match map.instances.get(i) {
            Some(inst) if inst.label == spec.target_label => Ok(vec![i]),
            _ => Err(not_found()),
        },
        None => {
            let all = map.instances_with_label(spec.target_label);
            if all.is_empty() {
                Err(not_found())
            } else {
                Ok(all)
            }
        }
    }
}

fn on_side(p: Pixel, center: [f64; 2], side: Side) -> bool {
    let (px, py) = (p.x as f64 + 0.5, p.y as f64 + 0.5);
    match side {
        Side::None => true,
        Side::Left => px < center[0],
        Side::Right => px > center[0],
        Side::Top => py < center[1],
        Side::Bottom => py > center[1],
    }
}

/// Goal source pixels: free pixels within `goal_band` (Chebyshev) of the
/// target instance, restricted to the requested side's half-plane through
/// the box center. Falls back to the free pixel nearest the instance center.
pub fn compute_goal(
    map: &SemanticMap,
    mapping: &LabelMapping,
    free: &BinaryMask,
    spec: &GoalSpec,
    goal_band: usize,
) -> Result<Vec<Pixel>> {
    free.ensure_dims(map.labels.dims())?;
    let (w, h) = free.dims();
    let band = goal_band as i64;
    let mut goals = BinaryMask::filled(w, h, false);

    for &i in &target_instances(map, mapping, spec)? {
        let inst = &map.instances[i];
        let bbox = inst.bbox;
        let labelled: Vec<Pixel> = bbox
            .pixels()
            .filter(|p| *map.labels.at(*p) == inst.label)
            .collect();
        let mut body = BinaryMask::filled(w, h, false);
        for p in if labelled.is_empty() {
            bbox.pixels().collect()
        } else {
            labelled
        } {
            body.set(p.x, p.y, true);
        }
        let center = bbox.center();
        let x0 = (bbox.xmin as i64 - band).max(0);
        let y0 = (bbox.ymin as i64 - band).max(0);
        let x1 = (bbox.xmax as i64 + band).min(w as i64);
        let y1 = (bbox.ymax as i64 + band).min(h as i64);
        for y in y0..y1 {
            for x in x0..x1 {
                let p = Pixel::new(x as usize, y as usize);
                if !*free.at(p) || !on_side(p, center, spec.side) {
                    continue;
                }
                let near = (y - band..=y + band).any(|qy| {
                    (x - band..=x + band)
                        .any(|qx| body.contains(qx, qy) && *body.get(qx as usize, qy as usize))
                });
                if near {
                    goals.set(p.x, p.y, true);
                }
            }
        }
    }

    let pixels: Vec<Pixel> = (0..goals.len())
        .filter(|&i| goals.as_slice()[i])
        .map(|i| goals.pixel_of(i))
        .collect();
    if !pixels.is_empty() {
        return Ok(pixels);
    }

    // singleton fallback: nearest free pixel to the (first) instance center
    let first = target_instances(map, mapping, spec)?[0];
    let c = map.instances[first].center;
    let nearest = (0..free.len())
        .filter(|&i| free.as_slice()[i])
        .map(|i| free.pixel_of(i))
        .min_by_key(|p| {
            let dx = p.x as i64 - c.x as i64;
            let dy = p.y as i64 - c.y as i64;
            (dx * dx + dy * dy, p.y, p.x)
        });
    match nearest {
        Some(p) => {
            log::warn!(
                "goal band empty; falling back to nearest free pixel ({}, {})",
                p.x,
                p.y
            );
            Ok(vec![p])
        }
        None => Err(Error::UnreachableGoal),
    }
}

/// Piecewise potential and the obstacle offset used to build it.
#[derive(Debug, Clone)]
pub struct Potential {
    pub phi: ScalarField,
    /// Largest finite geodesic distance over free space.
    pub b_obs: f64,
}

/// `Φ = w_g·D_g^w` on reachable free pixels and `w_obs·D_obs + b_obs` on
/// obstacles. Free pixels that cannot reach the goal take `b_obs`.
pub fn potential(
    d_gw: &ScalarField,
    d_obs: &ScalarField,
    free: &BinaryMask,
    cfg: &AnnotationConfig,
) -> Result<Potential> {
    d_gw.ensure_dims(free.dims())?;
    d_obs.ensure_dims(free.dims())?;
    let b_obs = d_gw
        .as_slice()
        .iter()
        .zip(free.as_slice())
        .filter(|(d, &f)| f && d.is_finite())
        .map(|(&d, _)| d)
        .fold(None, |acc: Option<f64>, d| {
            Some(acc.map_or(d, |a| a.max(d)))
        })
        .ok_or(Error::UnreachableScene)?;

    let phi = Raster::from_fn(free.width(), free.height(), |x, y| {
        if *free.get(x, y) {
            let d = *d_gw.get(x, y);
            if d.is_finite() {
                cfg.w_g * d
            } else {
                b_obs
            }
        } else {
            cfg.w_obs * d_obs.get(x, y) + b_obs
        }
    });
    Ok(Potential { phi, b_obs })
}

/// Half-sample symmetric reflection of an out-of-range index.
fn reflect(i: i64, n: usize) -> usize {
    let n = n as i64;
    let period = 2 * n;
    let mut m = i.rem_euclid(period);
    if m >= n {
        m = period - 1 - m;
    }
    m as usize
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as i64;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| libm::exp(-((i * i) as f64) / (2.0 * sigma * sigma)))
        .collect();
    let sum: f64 = k.iter().sum();
    for v in &mut k {
        *v /= sum;
    }
    k
}

/// Separable Gaussian blur with reflect padding, truncated at 3σ.
pub fn gaussian_smooth(field: &ScalarField, sigma: f64) -> ScalarField {
    if sigma <= 0.0 {
        return field.clone();
    }
    let kernel = gaussian_kernel(sigma);
    let r = (kernel.len() / 2) as i64;
    let (w, h) = field.dims();
    let horizontal = Raster::from_fn(w, h, |x, y| {
        kernel
            .iter()
            .enumerate()
            .map(|(k, wt)| wt * field.get(reflect(x as i64 + k as i64 - r, w), y))
            .sum()
    });
    Raster::from_fn(w, h, |x, y| {
        kernel
            .iter()
            .enumerate()
            .map(|(k, wt)| wt * horizontal.get(x, reflect(y as i64 + k as i64 - r, h)))
            .sum()
    })
}

/// 3×3 Sobel derivatives (∂/∂x, ∂/∂y) with reflect padding, scaled to
/// units per pixel.
pub fn sobel(field: &ScalarField) -> Raster<[f64; 2]> {
    let (w, h) = field.dims();
    let at = |x: i64, y: i64| *field.get(reflect(x, w), reflect(y, h));
    Raster::from_fn(w, h, |x, y| {
        let (x, y) = (x as i64, y as i64);
        let gx = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1))
            - (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
        let gy = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1))
            - (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
        [gx / 8.0, gy / 8.0]
    })
}

/// Unit direction from an obstacle pixel toward its nearest free pixel.
fn escape_direction(free: &BinaryMask, p: Pixel) -> [f64; 2] {
    let (w, h) = free.dims();
    let max_r = w.max(h) as i64;
    for r in 1..=max_r {
        let mut best: Option<(i64, i64, i64)> = None;
        for dy in -r..=r {
            for dx in -r..=r {
                if dx.abs() != r && dy.abs() != r {
                    continue;
                }
                let (qx, qy) = (p.x as i64 + dx, p.y as i64 + dy);
                if free.contains(qx, qy) && *free.get(qx as usize, qy as usize) {
                    let d2 = dx * dx + dy * dy;
                    if best.map_or(true, |b| d2 < b.0) {
                        best = Some((d2, dx, dy));
                    }
                }
            }
        }
        if let Some((d2, dx, dy)) = best {
            let n = (d2 as f64).sqrt();
            return [dx as f64 / n, dy as f64 / n];
        }
    }
    [0.0, 0.0]
}

/// Flow field from the potential. Free pixels follow
/// `u·D_pix / (W, H)` with `u = −∇Φ_s / (‖∇Φ_s‖ + ε)`; obstacle pixels get
/// the exactly normalized escape direction.
pub fn flow_field(
    phi: &ScalarField,
    free: &BinaryMask,
    d_pix: &ScalarField,
    cfg: &AnnotationConfig,
) -> Result<FlowFieldGrid> {
    phi.ensure_dims(free.dims())?;
    d_pix.ensure_dims(free.dims())?;
    let smoothed = gaussian_smooth(phi, cfg.gaussian_sigma);
    let grad = sobel(&smoothed);
    let (w, h) = free.dims();
    Ok(Raster::from_fn(w, h, |x, y| {
        let g = *grad.get(x, y);
        let gn = libm::hypot(g[0], g[1]);
        if *free.get(x, y) {
            let d = *d_pix.get(x, y);
            if !d.is_finite() {
                return [0.0, 0.0];
            }
            let ux = -g[0] / (gn + cfg.epsilon);
            let uy = -g[1] / (gn + cfg.epsilon);
            [ux * d / w as f64, uy * d / h as f64]
        } else if gn > 0.0 {
            [-g[0] / gn, -g[1] / gn]
        } else {
            escape_direction(free, Pixel::new(x, y))
        }
    }))
}

/// Uniformly samples a reachable start pixel far enough from the goal and
/// from obstacles. When no pixel qualifies the goal-distance constraint is
/// dropped first, then the obstacle-distance constraint.
pub fn sample_start(
    free: &BinaryMask,
    d_pix: &ScalarField,
    d_free: &ScalarField,
    cfg: &AnnotationConfig,
    seed: u64,
) -> Result<Pixel> {
    d_pix.ensure_dims(free.dims())?;
    d_free.ensure_dims(free.dims())?;
    let candidates = |min_goal: f64, min_obs: f64| -> Vec<usize> {
        (0..free.len())
            .filter(|&i| {
                let dp = d_pix.as_slice()[i];
                free.as_slice()[i]
                    && dp.is_finite()
                    && dp >= min_goal
                    && d_free.as_slice()[i] >= min_obs
            })
            .collect()
    };
    let attempts = [
        (cfg.start_min_goal_dist, cfg.start_min_obs_dist),
        (0.0, cfg.start_min_obs_dist),
        (0.0, 0.0),
    ];
    for (k, (min_goal, min_obs)) in attempts.into_iter().enumerate() {
        let pool = candidates(min_goal, min_obs);
        if pool.is_empty() {
            continue;
        }
        if k > 0 {
            log::warn!("start sampling relaxed constraints (level {k})");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pick = rng.gen_range(0..pool.len() as u64) as usize;
        return Ok(free.pixel_of(pool[pick]));
    }
    Err(Error::NoStartCandidate)
}

/// How the annotation start is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StartChoice {
    Sampled { seed: u64 },
    Fixed(Pixel),
}

/// Runs the full annotation pipeline with a sampled start.
pub fn annotate(
    map: &SemanticMap,
    mapping: &LabelMapping,
    spec: &GoalSpec,
    cfg: &AnnotationConfig,
    seed: u64,
) -> Result<Annotation> {
    annotate_with_stages(map, mapping, spec, cfg, StartChoice::Sampled { seed }).map(|(a, _)| a)
}

/// Runs the annotation pipeline and also returns every intermediate raster.
pub fn annotate_with_stages(
    map: &SemanticMap,
    mapping: &LabelMapping,
    spec: &GoalSpec,
    cfg: &AnnotationConfig,
    start: StartChoice,
) -> Result<(Annotation, AnnotationStages)> {
    cfg.validate()?;
    let (w, h) = map.labels.dims();

    let free = extract_free(map, mapping).map_err(|e| e.at(Stage::Traversability))?;
    let obstacles = free.negated();
    let goals = compute_goal(map, mapping, &free, spec, cfg.goal_band)
        .map_err(|e| e.at(Stage::Traversability))?;

    let d_free = dto(&free).distances;
    let cost =
        cost_map(&d_free, cfg.rho_safe, cfg.lambda_safe).map_err(|e| e.at(Stage::Geodesic))?;
    let geo = geodesic(&free, &cost, &goals, cfg.geodesic_options())
        .map_err(|e| e.at(Stage::Geodesic))?;

    let d_obs = dtf(&obstacles).distances;

    let pot = potential(&geo.d_weighted, &d_obs, &free, cfg).map_err(|e| e.at(Stage::Potential))?;
    let field =
        flow_field(&pot.phi, &free, &geo.d_pixel, cfg).map_err(|e| e.at(Stage::FlowField))?;

    let start = match start {
        StartChoice::Sampled { seed } => sample_start(&free, &geo.d_pixel, &d_free, cfg, seed)
            .map_err(|e| e.at(Stage::Trajectory))?,
        StartChoice::Fixed(p) => p,
    };
    let raw_path = backtrack(&geo.pred, start).map_err(|e| e.at(Stage::Trajectory))?;
    let pixel_points: Vec<[f64; 2]> = raw_path.iter().map(|p| [p.x as f64, p.y as f64]).collect();
    let resampled = resample_polyline(&pixel_points, cfg.traj_waypoints);
    let trajectory = Trajectory::from_arrays(
        &resampled
            .iter()
            .map(|p| [p[0] / w as f64, p[1] / h as f64])
            .collect::<Vec<_>>(),
    );

    let annotation = Annotation {
        field,
        trajectory,
        goal_pixels: geo.goals.clone(),
        start,
    };
    let stages = AnnotationStages {
        free,
        d_free,
        cost,
        geodesic: geo,
        d_obs,
        potential: pot,
        raw_path,
    };
    Ok((annotation, stages))
}
