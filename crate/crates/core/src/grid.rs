//! Raster primitives: semantic maps, masks, scalar and vector fields, and the
//! conversions between pixel indices and normalized `[0,1]²` coordinates.
//!
//! Every raster is row-major with `y` pointing down. A normalized point
//! `(u, v)` covers the image with `u` rightward and `v` downward; pixel
//! `(x, y)` has its center at `((x + 0.5) / W, (y + 0.5) / H)`.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Value stored in distance and cost fields for unreachable or undefined cells.
pub const UNREACHABLE: f64 = f64::INFINITY;

/// Numerical-stability constant shared by direction normalizations and metrics.
pub const EPSILON: f64 = 1e-8;

/// Planar vector `[x, y]` in whatever units the surrounding field uses.
pub type Vec2 = [f64; 2];

#[inline]
pub fn norm(v: Vec2) -> f64 {
    libm::hypot(v[0], v[1])
}

/// Integer pixel coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pixel {
    pub x: usize,
    pub y: usize,
}

impl Pixel {
    pub const fn new(x: usize, y: usize) -> Self {
        Pixel { x, y }
    }

    pub fn dist(self, other: Pixel) -> f64 {
        let dx = self.x as f64 - other.x as f64;
        let dy = self.y as f64 - other.y as f64;
        libm::hypot(dx, dy)
    }

    /// Normalized coordinate `(x/W, y/H)` used for stored trajectories.
    pub fn to_norm(self, width: usize, height: usize) -> NormPoint {
        NormPoint::new(self.x as f64 / width as f64, self.y as f64 / height as f64)
    }
}

/// A point of the normalized workspace `[0,1]²`. Components are clamped on
/// construction; NaN clamps to 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct NormPoint {
    u: f64,
    v: f64,
}

fn clamp_unit(a: f64) -> f64 {
    if a.is_nan() {
        0.0
    } else {
        a.clamp(0.0, 1.0)
    }
}

impl NormPoint {
    pub fn new(u: f64, v: f64) -> Self {
        NormPoint {
            u: clamp_unit(u),
            v: clamp_unit(v),
        }
    }

    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn v(&self) -> f64 {
        self.v
    }

    pub fn to_array(self) -> Vec2 {
        [self.u, self.v]
    }

    pub fn dist(self, other: NormPoint) -> f64 {
        libm::hypot(self.u - other.u, self.v - other.v)
    }
}

impl From<[f64; 2]> for NormPoint {
    fn from(a: [f64; 2]) -> Self {
        NormPoint::new(a[0], a[1])
    }
}

impl From<NormPoint> for [f64; 2] {
    fn from(p: NormPoint) -> Self {
        [p.u, p.v]
    }
}

/// Maps a normalized point to the pixel containing it:
/// `px = clip(floor(u·W), 0, W−1)`, `py = clip(floor(v·H), 0, H−1)`.
pub fn norm_to_pixel(p: NormPoint, width: usize, height: usize) -> Pixel {
    let cell = |a: f64, n: usize| -> usize {
        let i = (a * n as f64).floor();
        if i <= 0.0 {
            0
        } else {
            (i as usize).min(n - 1)
        }
    };
    Pixel::new(cell(p.u, width), cell(p.v, height))
}

/// Dense row-major raster.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

pub type BinaryMask = Raster<bool>;
pub type ScalarField = Raster<f64>;
/// Velocity vectors in normalized-coordinate units per unit normalized time.
pub type FlowFieldGrid = Raster<Vec2>;

impl<T: Clone> Raster<T> {
    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Raster {
            width,
            height,
            data: vec![value; width * height],
        }
    }
}

impl<T> Raster<T> {
    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::LengthMismatch(width * height, data.len()));
        }
        Ok(Raster {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Raster {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        debug_assert!(x < self.width && y < self.height);
        y * self.width + x
    }

    #[inline]
    pub fn pixel_of(&self, index: usize) -> Pixel {
        Pixel::new(index % self.width, index / self.width)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> &T {
        &self.data[y * self.width + x]
    }

    #[inline]
    pub fn at(&self, p: Pixel) -> &T {
        self.get(p.x, p.y)
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: T) {
        let i = self.index(x, y);
        self.data[i] = value;
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn contains(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Raster<U> {
        Raster {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn ensure_dims(&self, dims: (usize, usize)) -> Result<()> {
        if self.dims() != dims {
            return Err(Error::DimensionMismatch {
                expected: dims,
                actual: self.dims(),
            });
        }
        Ok(())
    }
}

impl BinaryMask {
    pub fn negated(&self) -> BinaryMask {
        self.map(|b| !b)
    }

    pub fn count_true(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }
}

impl FlowFieldGrid {
    /// Fails on the first NaN or infinite component.
    pub fn validate_finite(&self) -> Result<()> {
        match self
            .data
            .iter()
            .position(|v| !(v[0].is_finite() && v[1].is_finite()))
        {
            Some(i) => {
                let p = self.pixel_of(i);
                Err(Error::NonFiniteField { x: p.x, y: p.y })
            }
            None => Ok(()),
        }
    }
}

/// Types that can be bilinearly interpolated.
pub trait Interpolate: Copy {
    fn blend(corners: [Self; 4], wx: f64, wy: f64) -> Self;
}

impl Interpolate for f64 {
    fn blend(c: [f64; 4], wx: f64, wy: f64) -> f64 {
        // a corner with zero weight must not turn the result into NaN
        let weights = [
            (1.0 - wx) * (1.0 - wy),
            wx * (1.0 - wy),
            (1.0 - wx) * wy,
            wx * wy,
        ];
        let mut acc = 0.0;
        for (value, w) in c.iter().zip(weights) {
            if w == 0.0 {
                continue;
            }
            if value.is_infinite() {
                return UNREACHABLE;
            }
            acc += value * w;
        }
        acc
    }
}

impl Interpolate for Vec2 {
    fn blend(c: [Vec2; 4], wx: f64, wy: f64) -> Vec2 {
        let lerp = |a: f64, b: f64, t: f64| a + (b - a) * t;
        let mut out = [0.0; 2];
        for k in 0..2 {
            let top = lerp(c[0][k], c[1][k], wx);
            let bottom = lerp(c[2][k], c[3][k], wx);
            out[k] = lerp(top, bottom, wy);
        }
        out
    }
}

impl<T: Interpolate> Raster<T> {
    /// Edge-clamped bilinear interpolation at a normalized point. Cell
    /// centers reproduce stored values exactly; within half a pixel of the
    /// border the nearest edge row/column is held constant.
    pub fn sample(&self, p: NormPoint) -> T {
        let fx = (p.u() * self.width as f64 - 0.5).clamp(0.0, (self.width - 1) as f64);
        let fy = (p.v() * self.height as f64 - 0.5).clamp(0.0, (self.height - 1) as f64);
        let x0 = fx.floor() as usize;
        let y0 = fy.floor() as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let corners = [
            *self.get(x0, y0),
            *self.get(x1, y0),
            *self.get(x0, y1),
            *self.get(x1, y1),
        ];
        T::blend(corners, fx - x0 as f64, fy - y0 as f64)
    }
}

/// Bilinear sample of a scalar or vector field at a normalized point.
pub fn bilinear_sample<T: Interpolate>(field: &Raster<T>, p: NormPoint) -> T {
    field.sample(p)
}

/// Axis-aligned pixel box, `xmin..xmax` × `ymin..ymax` (max exclusive).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PixelBox {
    pub xmin: usize,
    pub ymin: usize,
    pub xmax: usize,
    pub ymax: usize,
}

impl PixelBox {
    pub fn width(&self) -> usize {
        self.xmax - self.xmin
    }

    pub fn height(&self) -> usize {
        self.ymax - self.ymin
    }

    /// Continuous center in pixel-edge coordinates.
    pub fn center(&self) -> [f64; 2] {
        [
            (self.xmin + self.xmax) as f64 / 2.0,
            (self.ymin + self.ymax) as f64 / 2.0,
        ]
    }

    pub fn contains(&self, p: Pixel) -> bool {
        p.x >= self.xmin && p.x < self.xmax && p.y >= self.ymin && p.y < self.ymax
    }

    pub fn pixels(&self) -> impl Iterator<Item = Pixel> + '_ {
        (self.ymin..self.ymax)
            .flat_map(move |y| (self.xmin..self.xmax).map(move |x| Pixel::new(x, y)))
    }
}

/// One labeled object in a semantic map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectInstance {
    pub label: u8,
    pub bbox: PixelBox,
    pub center: Pixel,
}

/// Partition of label ids into traversable and blocking roles.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelMapping {
    pub free_labels: BTreeSet<u8>,
    pub obstacle_labels: BTreeSet<u8>,
    pub targetable_labels: BTreeSet<u8>,
    /// Human-readable category names, used for instruction text.
    #[serde(default)]
    pub names: BTreeMap<u8, String>,
}

impl LabelMapping {
    pub fn validate(&self) -> Result<()> {
        if let Some(l) = self.free_labels.intersection(&self.obstacle_labels).next() {
            return Err(Error::Config(format!(
                "label {l} is both free and obstacle"
            )));
        }
        if let Some(l) = self
            .targetable_labels
            .difference(&self.obstacle_labels)
            .next()
        {
            return Err(Error::Config(format!(
                "targetable label {l} is not an obstacle label"
            )));
        }
        Ok(())
    }

    pub fn is_free(&self, label: u8) -> Option<bool> {
        if self.free_labels.contains(&label) {
            Some(true)
        } else if self.obstacle_labels.contains(&label) {
            Some(false)
        } else {
            None
        }
    }

    pub fn name(&self, label: u8) -> String {
        self.names
            .get(&label)
            .cloned()
            .unwrap_or_else(|| format!("object{label}"))
    }

    pub fn label_by_name(&self, name: &str) -> Option<u8> {
        self.names
            .iter()
            .find(|(_, n)| n.as_str() == name)
            .map(|(&l, _)| l)
    }
}

/// Integer label raster with its object instances.
#[derive(Debug, Clone, PartialEq)]
pub struct SemanticMap {
    pub labels: Raster<u8>,
    pub instances: Vec<ObjectInstance>,
}

impl SemanticMap {
    pub fn new(labels: Raster<u8>, instances: Vec<ObjectInstance>) -> Result<Self> {
        let (w, h) = labels.dims();
        for inst in &instances {
            let b = inst.bbox;
            if !(b.xmin < b.xmax && b.xmax <= w && b.ymin < b.ymax && b.ymax <= h) {
                return Err(Error::MalformedBox(
                    b.xmin as f64,
                    b.ymin as f64,
                    b.xmax as f64,
                    b.ymax as f64,
                ));
            }
        }
        Ok(SemanticMap { labels, instances })
    }

    pub fn width(&self) -> usize {
        self.labels.width()
    }

    pub fn height(&self) -> usize {
        self.labels.height()
    }

    /// Indices (into `instances`) of every instance carrying `label`.
    pub fn instances_with_label(&self, label: u8) -> Vec<usize> {
        self.instances
            .iter()
            .enumerate()
            .filter(|(_, inst)| inst.label == label)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Free-space mask: `true` where the pixel label is a free label.
pub fn extract_free(map: &SemanticMap, mapping: &LabelMapping) -> Result<BinaryMask> {
    let labels = &map.labels;
    let mut bits = Vec::with_capacity(labels.len());
    for (i, &label) in labels.as_slice().iter().enumerate() {
        match mapping.is_free(label) {
            Some(b) => bits.push(b),
            None => {
                let p = labels.pixel_of(i);
                return Err(Error::UnknownLabel {
                    label,
                    x: p.x,
                    y: p.y,
                });
            }
        }
    }
    Raster::from_vec(labels.width(), labels.height(), bits)
}
