//! Evaluation protocol: fixed-count arc-length resampling, trajectory
//! metrics (FGE, CR, Curv, PLR) and field metrics (AE, ME).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{norm, norm_to_pixel, BinaryMask, FlowFieldGrid, Vec2, EPSILON};
use crate::trajectory::{polyline_length, resample_polyline, Trajectory};

/// Waypoint count every trajectory is resampled to before scoring.
pub const METRIC_WAYPOINTS: usize = 100;

fn resampled(traj: &Trajectory) -> Result<Vec<Vec2>> {
    if traj.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    Ok(resample_polyline(&traj.to_arrays(), METRIC_WAYPOINTS))
}

/// Final goal error: distance between the last resampled predicted point and
/// the annotated endpoint.
pub fn fge(pred: &Trajectory, annotated: &Trajectory) -> Result<f64> {
    let p = resampled(pred)?;
    let a = resampled(annotated)?;
    let (x, g) = (p[p.len() - 1], a[a.len() - 1]);
    Ok(libm::hypot(x[0] - g[0], x[1] - g[1]))
}

/// Whether any resampled point falls in an obstacle cell (`true` = obstacle).
pub fn collision(pred: &Trajectory, obstacles: &BinaryMask) -> Result<bool> {
    let (w, h) = obstacles.dims();
    if w == 0 || h == 0 {
        return Err(Error::DimensionMismatch {
            expected: (1, 1),
            actual: (w, h),
        });
    }
    Ok(resampled(pred)?
        .into_iter()
        .any(|p| *obstacles.at(norm_to_pixel(p.into(), w, h))))
}

fn wrap_to_pi(a: f64) -> f64 {
    use std::f64::consts::PI;
    let mut r = (a + PI).rem_euclid(2.0 * PI) - PI;
    if r == -PI {
        r = PI;
    }
    r
}

/// Mean absolute heading change over consecutive non-degenerate segments of
/// a polyline, taken as-is. Zero when fewer than two segments remain.
pub fn mean_heading_change(points: &[Vec2]) -> f64 {
    let headings: Vec<f64> = points
        .windows(2)
        .map(|s| [s[1][0] - s[0][0], s[1][1] - s[0][1]])
        .filter(|d| norm(*d) > EPSILON)
        .map(|d| libm::atan2(d[1], d[0]))
        .collect();
    if headings.len() < 2 {
        return 0.0;
    }
    let total: f64 = headings
        .windows(2)
        .map(|h| wrap_to_pi(h[1] - h[0]).abs())
        .sum();
    total / (headings.len() - 1) as f64
}

/// Curvature-based smoothness of the resampled trajectory, in radians.
pub fn curvature(pred: &Trajectory) -> Result<f64> {
    Ok(mean_heading_change(&resampled(pred)?))
}

/// Ratio of resampled predicted length to resampled annotated length.
pub fn plr(pred: &Trajectory, annotated: &Trajectory) -> Result<f64> {
    let reference = polyline_length(&resampled(annotated)?);
    if reference <= 0.0 {
        return Err(Error::ZeroLengthReference);
    }
    Ok(polyline_length(&resampled(pred)?) / reference)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldMetrics {
    /// Mean angular error in degrees.
    pub ae: f64,
    /// Mean absolute norm difference.
    pub me: f64,
}

/// Angular and magnitude error over every cell of the annotated lattice.
pub fn field_metrics(pred: &FlowFieldGrid, annotated: &FlowFieldGrid) -> Result<FieldMetrics> {
    pred.ensure_dims(annotated.dims())?;
    if annotated.is_empty() {
        return Err(Error::LengthMismatch(0, 0));
    }
    let n = annotated.len() as f64;
    let mut ae = 0.0;
    let mut me = 0.0;
    for (p, a) in pred.as_slice().iter().zip(annotated.as_slice()) {
        let (np, na) = (norm(*p), norm(*a));
        let c = ((p[0] / (np + EPSILON)) * (a[0] / (na + EPSILON))
            + (p[1] / (np + EPSILON)) * (a[1] / (na + EPSILON)))
            .clamp(-1.0, 1.0);
        ae += libm::acos(c).to_degrees();
        me += (np - na).abs();
    }
    Ok(FieldMetrics {
        ae: ae / n,
        me: me / n,
    })
}

/// Per-episode trajectory metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub fge: f64,
    pub cr: f64,
    pub curv: f64,
    pub plr: f64,
}

pub fn evaluate_episode(
    pred: &Trajectory,
    annotated: &Trajectory,
    obstacles: &BinaryMask,
) -> Result<EpisodeMetrics> {
    Ok(EpisodeMetrics {
        fge: fge(pred, annotated)?,
        cr: if collision(pred, obstacles)? {
            1.0
        } else {
            0.0
        },
        curv: curvature(pred)?,
        plr: plr(pred, annotated)?,
    })
}

/// One evaluation record: trajectory metrics plus optional field metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub fge: f64,
    pub cr: f64,
    pub curv: f64,
    pub plr: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ae: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub me: Option<f64>,
}

impl MetricsReport {
    pub fn new(episode: EpisodeMetrics, field: Option<FieldMetrics>) -> Self {
        MetricsReport {
            fge: episode.fge,
            cr: episode.cr,
            curv: episode.curv,
            plr: episode.plr,
            ae: field.map(|f| f.ae),
            me: field.map(|f| f.me),
        }
    }
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

/// Batch means and medians over evaluated episodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub episodes: usize,
    pub mean_fge: f64,
    pub mean_cr: f64,
    pub mean_curv: f64,
    pub mean_plr: f64,
    pub median_fge: f64,
    pub median_curv: f64,
    pub median_plr: f64,
}

impl BatchSummary {
    pub fn from_episodes(episodes: &[EpisodeMetrics]) -> Option<Self> {
        let col = |f: fn(&EpisodeMetrics) -> f64| episodes.iter().map(f).collect::<Vec<_>>();
        let (fges, crs, curvs, plrs) = (
            col(|e| e.fge),
            col(|e| e.cr),
            col(|e| e.curv),
            col(|e| e.plr),
        );
        Some(BatchSummary {
            episodes: episodes.len(),
            mean_fge: mean(&fges)?,
            mean_cr: mean(&crs)?,
            mean_curv: mean(&curvs)?,
            mean_plr: mean(&plrs)?,
            median_fge: median(&fges)?,
            median_curv: median(&curvs)?,
            median_plr: median(&plrs)?,
        })
    }
}
