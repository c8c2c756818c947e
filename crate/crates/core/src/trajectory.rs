use serde::{Deserialize, Serialize};

use crate::grid::{NormPoint, Pixel, Vec2};

/// Ordered sequence of normalized points.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Trajectory {
    points: Vec<NormPoint>,
}

impl Trajectory {
    pub fn new(points: Vec<NormPoint>) -> Self {
        Trajectory { points }
    }

    pub fn from_arrays(points: &[Vec2]) -> Self {
        Trajectory {
            points: points.iter().map(|&p| NormPoint::from(p)).collect(),
        }
    }

    /// Pixel polyline stored as `(x/W, y/H)`.
    pub fn from_pixels(pixels: &[Pixel], width: usize, height: usize) -> Self {
        Trajectory {
            points: pixels.iter().map(|p| p.to_norm(width, height)).collect(),
        }
    }

    pub fn points(&self) -> &[NormPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn first(&self) -> Option<NormPoint> {
        self.points.first().copied()
    }

    pub fn last(&self) -> Option<NormPoint> {
        self.points.last().copied()
    }

    pub fn to_arrays(&self) -> Vec<Vec2> {
        self.points.iter().map(|p| p.to_array()).collect()
    }

    /// Sum of segment lengths.
    pub fn length(&self) -> f64 {
        polyline_length(&self.to_arrays())
    }

    /// Uniform arc-length resampling to `k` points.
    pub fn resample(&self, k: usize) -> Trajectory {
        Trajectory::from_arrays(&resample_polyline(&self.to_arrays(), k))
    }
}

pub fn polyline_length(points: &[Vec2]) -> f64 {
    points
        .windows(2)
        .map(|s| libm::hypot(s[1][0] - s[0][0], s[1][1] - s[0][1]))
        .sum()
}

/// Piecewise-linear resampling at `k` uniformly spaced arc lengths in
/// `[0, L]`. Endpoints are reproduced exactly; a zero-length input yields `k`
/// copies of its first point. Panics on empty input or `k < 2`.
pub fn resample_polyline(points: &[Vec2], k: usize) -> Vec<Vec2> {
    assert!(!points.is_empty(), "cannot resample an empty polyline");
    assert!(k >= 2, "resampling needs at least two output points");
    let mut cumulative = Vec::with_capacity(points.len());
    let mut s = 0.0;
    cumulative.push(0.0);
    for seg in points.windows(2) {
        s += libm::hypot(seg[1][0] - seg[0][0], seg[1][1] - seg[0][1]);
        cumulative.push(s);
    }
    let total = s;
    if total <= 0.0 {
        return vec![points[0]; k];
    }

    let mut out = Vec::with_capacity(k);
    out.push(points[0]);
    let mut seg = 1;
    for j in 1..k - 1 {
        let target = total * j as f64 / (k - 1) as f64;
        while seg < points.len() - 1 && cumulative[seg] < target {
            seg += 1;
        }
        let (s0, s1) = (cumulative[seg - 1], cumulative[seg]);
        let (a, b) = (points[seg - 1], points[seg]);
        let t = if s1 > s0 {
            (target - s0) / (s1 - s0)
        } else {
            0.0
        };
        out.push([a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t]);
    }
    out.push(points[points.len() - 1]);
    out
}
