//! Exact Euclidean distance transforms.
//!
//! Both transforms run the separable lower-envelope-of-parabolas algorithm
//! on squared distances. Squared distances between pixels are integers, so
//! the intermediate values stay exact in `f64` and the final square root is
//! the only rounding step.

use crate::grid::{BinaryMask, ScalarField, UNREACHABLE};

/// Whether the transform found any site to measure distance to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformStatus {
    Complete,
    /// The mask has no site pixels; every non-site pixel holds [`UNREACHABLE`].
    NoSites,
}

#[derive(Debug, Clone)]
pub struct DistanceField {
    pub distances: ScalarField,
    pub status: TransformStatus,
}

// Exceeds every squared distance on rasters up to 2^19 per side while
// `FAR + q²` stays exactly representable.
const FAR: f64 = (1u64 << 40) as f64;

/// One-dimensional squared distance transform of a sampled function
/// (Felzenszwalb & Huttenlocher). `v` and `z` are scratch buffers.
fn transform_1d(f: &[f64], out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        let fq = f[q] + (q * q) as f64;
        let mut s;
        loop {
            let p = v[k];
            s = (fq - (f[p] + (p * p) as f64)) / (2.0 * q as f64 - 2.0 * p as f64);
            if s <= z[k] {
                k -= 1;
            } else {
                break;
            }
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    k = 0;
    for (q, slot) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let d = q as f64 - v[k] as f64;
        *slot = d * d + f[v[k]];
    }
}

/// Squared Euclidean distance from every pixel to the nearest `site` pixel,
/// or `None` when the mask has no sites.
pub fn squared_distance_to_sites(sites: &BinaryMask) -> Option<Vec<f64>> {
    let (w, h) = sites.dims();
    if !sites.as_slice().iter().any(|&s| s) {
        return None;
    }
    let n = w.max(h);
    let mut v = vec![0usize; n];
    let mut z = vec![0f64; n + 1];
    let mut col_in = vec![0f64; h];
    let mut col_out = vec![0f64; h];
    let mut grid = vec![0f64; w * h];

    for x in 0..w {
        for y in 0..h {
            col_in[y] = if *sites.get(x, y) { 0.0 } else { FAR };
        }
        transform_1d(&col_in, &mut col_out, &mut v, &mut z);
        for y in 0..h {
            grid[y * w + x] = col_out[y];
        }
    }

    let mut row_out = vec![0f64; w];
    for y in 0..h {
        let row = &mut grid[y * w..(y + 1) * w];
        transform_1d(row, &mut row_out, &mut v, &mut z);
        row.copy_from_slice(&row_out);
    }
    Some(grid)
}

fn distance_to_sites(sites: &BinaryMask) -> DistanceField {
    let (w, h) = sites.dims();
    match squared_distance_to_sites(sites) {
        Some(sq) => DistanceField {
            distances: ScalarField::from_vec(w, h, sq.into_iter().map(f64::sqrt).collect())
                .expect("dimensions preserved"),
            status: TransformStatus::Complete,
        },
        None => {
            log::warn!("distance transform: mask has no site pixels");
            DistanceField {
                distances: ScalarField::from_fn(w, h, |x, y| {
                    if *sites.get(x, y) {
                        0.0
                    } else {
                        UNREACHABLE
                    }
                }),
                status: TransformStatus::NoSites,
            }
        }
    }
}

/// Distance-to-obstacle over free space: each free pixel holds the Euclidean
/// pixel distance to the nearest obstacle pixel; obstacle pixels hold 0.
pub fn dto(free: &BinaryMask) -> DistanceField {
    distance_to_sites(&free.negated())
}

/// Distance-to-free over obstacle space: each obstacle pixel holds the
/// distance to the nearest free pixel; free pixels hold 0.
pub fn dtf(obstacles: &BinaryMask) -> DistanceField {
    distance_to_sites(&obstacles.negated())
}
