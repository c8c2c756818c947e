//! Training-side math evaluated without a learner: stratified query sampling
//! and the direction/magnitude losses against an annotated field.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{norm, FlowFieldGrid, NormPoint, Vec2, EPSILON};

/// Default magnitude-loss weight.
pub const DEFAULT_LAMBDA: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub points: Vec<NormPoint>,
    /// Strata per axis.
    pub grid: usize,
    /// Points drawn per stratum before truncation.
    pub per_bin: usize,
}

/// Jittered stratified sampling of `[0,1]²`: `⌈n_s / g²⌉` uniform points in
/// every cell of a `g×g` partition, concatenated row by row and truncated to
/// the first `n_s`.
pub fn stratified_sample(g: usize, n_s: usize, seed: u64) -> Result<SampleBatch> {
    if g == 0 || n_s == 0 {
        return Err(Error::Config(
            "stratified sampling needs g >= 1 and n_s >= 1".into(),
        ));
    }
    let cells = g * g;
    let per_bin = n_s.div_ceil(cells);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(per_bin * cells);
    for i in 0..g {
        for j in 0..g {
            for _ in 0..per_bin {
                let du: f64 = rng.gen();
                let dv: f64 = rng.gen();
                points.push(NormPoint::new(
                    (j as f64 + du) / g as f64,
                    (i as f64 + dv) / g as f64,
                ));
            }
        }
    }
    points.truncate(n_s);
    Ok(SampleBatch {
        points,
        grid: g,
        per_bin,
    })
}

/// Target vectors: the annotated field bilinearly sampled at the query points.
pub fn sample_targets(field: &FlowFieldGrid, points: &[NormPoint]) -> Vec<Vec2> {
    points.iter().map(|&p| field.sample(p)).collect()
}

fn check_lengths(pred: &[Vec2], target: &[Vec2]) -> Result<()> {
    if pred.len() != target.len() {
        return Err(Error::LengthMismatch(pred.len(), target.len()));
    }
    if pred.is_empty() {
        return Err(Error::LengthMismatch(0, 0));
    }
    Ok(())
}

/// Mean of `1 − v·v* / (‖v‖‖v*‖ + ε)`.
pub fn direction_loss(pred: &[Vec2], target: &[Vec2]) -> Result<f64> {
    check_lengths(pred, target)?;
    let sum: f64 = pred
        .iter()
        .zip(target)
        .map(|(v, t)| 1.0 - (v[0] * t[0] + v[1] * t[1]) / (norm(*v) * norm(*t) + EPSILON))
        .sum();
    Ok(sum / pred.len() as f64)
}

/// Mean of `(‖v‖ − ‖v*‖)²`.
pub fn magnitude_loss(pred: &[Vec2], target: &[Vec2]) -> Result<f64> {
    check_lengths(pred, target)?;
    let sum: f64 = pred
        .iter()
        .zip(target)
        .map(|(v, t)| (norm(*v) - norm(*t)).powi(2))
        .sum();
    Ok(sum / pred.len() as f64)
}

/// `direction_loss + λ·magnitude_loss`.
pub fn total_loss(pred: &[Vec2], target: &[Vec2], lambda: f64) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(Error::Config(format!(
            "loss weight must be >= 0 (got {lambda})"
        )));
    }
    Ok(direction_loss(pred, target)? + lambda * magnitude_loss(pred, target)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub seed: u64,
    pub n_samples: usize,
    pub grid: usize,
    pub lambda: f64,
    pub direction: f64,
    pub magnitude: f64,
    pub total: f64,
}

/// Compares a predicted field against an annotated one on a stratified batch.
pub fn evaluate_losses(
    pred: &FlowFieldGrid,
    target: &FlowFieldGrid,
    g: usize,
    n_s: usize,
    lambda: f64,
    seed: u64,
) -> Result<LossReport> {
    let batch = stratified_sample(g, n_s, seed)?;
    let p = sample_targets(pred, &batch.points);
    let t = sample_targets(target, &batch.points);
    let direction = direction_loss(&p, &t)?;
    let magnitude = magnitude_loss(&p, &t)?;
    Ok(LossReport {
        seed,
        n_samples: batch.points.len(),
        grid: g,
        lambda,
        direction,
        magnitude,
        total: total_loss(&p, &t, lambda)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cell() {
        let b = stratified_sample(1, 5, 9).unwrap();
        assert_eq!(b.points.len(), 5);
        assert_eq!(b.per_bin, 5);
    }

    #[test]
    fn truncation_keeps_cell_major_prefix() {
        let b = stratified_sample(3, 10, 1).unwrap();
        assert_eq!(b.per_bin, 2);
        assert_eq!(b.points.len(), 10);
        // the 10th point is the first draw of cell (row 1, col 1)
        let p = b.points[9];
        assert!(p.u() >= 1.0 / 3.0 && p.u() < 2.0 / 3.0);
        assert!(p.v() >= 1.0 / 3.0 && p.v() < 2.0 / 3.0);
    }

    #[test]
    fn loss_identities() {
        // norms of 5: the +ε guard stays below 1e-9 once ‖v‖² ≥ 10
        let t = vec![[3.0, 4.0], [-4.0, 3.0]];
        let neg: Vec<Vec2> = t.iter().map(|v| [-v[0], -v[1]]).collect();
        assert!(direction_loss(&t, &t).unwrap().abs() < 1e-9);
        assert!((direction_loss(&neg, &t).unwrap() - 2.0).abs() < 1e-9);
        assert_eq!(magnitude_loss(&neg, &t).unwrap(), 0.0);
        let unit = vec![[1.0, 0.0]; 3];
        let double = vec![[0.0, 2.0]; 3];
        assert_eq!(magnitude_loss(&double, &unit).unwrap(), 1.0);
        assert!(total_loss(&t, &t, 0.5).unwrap().abs() < 1e-9);
        assert!(total_loss(&t, &t, -0.1).is_err());
        assert!(direction_loss(&t, &unit).is_err());
    }

    #[test]
    fn zero_vectors_are_guarded() {
        let z = vec![[0.0, 0.0]];
        assert_eq!(direction_loss(&z, &z).unwrap(), 1.0);
    }
}
