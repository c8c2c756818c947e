//! Trajectory rollout from a flow field: dense grid query, bilinear lookup
//! and fixed-horizon forward Euler integration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{FlowFieldGrid, NormPoint, Raster, Vec2, EPSILON};
use crate::trajectory::Trajectory;

/// Velocity rescaling applied inside the Euler loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RolloutMode {
    /// `v / ((1 − t) + β·t^α)`.
    #[default]
    Stabilized,
    /// `v / (1 − t)`.
    RawInverse,
    /// `v / (‖v‖ + ε)`.
    UnitSpeed,
}

impl RolloutMode {
    pub const ALL: [RolloutMode; 3] = [
        RolloutMode::Stabilized,
        RolloutMode::RawInverse,
        RolloutMode::UnitSpeed,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            RolloutMode::Stabilized => "stabilized",
            RolloutMode::RawInverse => "raw_inverse",
            RolloutMode::UnitSpeed => "unit_speed",
        }
    }
}

impl std::str::FromStr for RolloutMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RolloutMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown rollout mode {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RolloutConfig {
    /// Number of Euler steps T.
    pub steps: usize,
    /// Side length of the dense query grid.
    pub grid_size: usize,
    pub alpha: f64,
    pub beta: f64,
    pub mode: RolloutMode,
    pub epsilon: f64,
}

impl Default for RolloutConfig {
    fn default() -> Self {
        RolloutConfig {
            steps: 100,
            grid_size: 100,
            alpha: 10.0,
            beta: 0.5,
            mode: RolloutMode::Stabilized,
            epsilon: EPSILON,
        }
    }
}

impl RolloutConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps < 1 {
            return Err(Error::Config("rollout steps must be >= 1".into()));
        }
        if self.grid_size < 2 {
            return Err(Error::Config("rollout grid_size must be >= 2".into()));
        }
        if !(self.alpha > 0.0 && self.beta > 0.0) {
            return Err(Error::Config(format!(
                "alpha and beta must be > 0 (got {}, {})",
                self.alpha, self.beta
            )));
        }
        Ok(())
    }

    /// Inverse-time denominator `(1 − t) + β·t^α`.
    pub fn stabilizer(&self, t: f64) -> f64 {
        (1.0 - t) + self.beta * libm::pow(t, self.alpha)
    }
}

/// Source of flow vectors for a fixed (scene, instruction) context.
///
/// Implementations answer batched point queries; [`query_grid`] turns them
/// into a dense grid. A learned model plugs in here.
pub trait FieldProvider {
    fn query_points(&self, points: &[NormPoint]) -> Result<Vec<Vec2>>;
}

/// Serves an already annotated raster by bilinear sampling.
#[derive(Debug, Clone, Copy)]
pub struct AnnotatedFieldProvider<'a> {
    pub field: &'a FlowFieldGrid,
}

impl FieldProvider for AnnotatedFieldProvider<'_> {
    fn query_points(&self, points: &[NormPoint]) -> Result<Vec<Vec2>> {
        Ok(points.iter().map(|&p| self.field.sample(p)).collect())
    }
}

impl FieldProvider for FlowFieldGrid {
    fn query_points(&self, points: &[NormPoint]) -> Result<Vec<Vec2>> {
        AnnotatedFieldProvider { field: self }.query_points(points)
    }
}

/// Dense `g×g` grid whose cell `(i, j)` holds the field at the normalized
/// cell center `((j + 0.5)/g, (i + 0.5)/g)`.
pub fn query_grid<P: FieldProvider + ?Sized>(provider: &P, g: usize) -> Result<FlowFieldGrid> {
    if g < 1 {
        return Err(Error::Config("query grid size must be >= 1".into()));
    }
    let centers: Vec<NormPoint> = (0..g * g)
        .map(|k| {
            let (i, j) = (k / g, k % g);
            NormPoint::new((j as f64 + 0.5) / g as f64, (i as f64 + 0.5) / g as f64)
        })
        .collect();
    let values = provider.query_points(&centers)?;
    if values.len() != centers.len() {
        return Err(Error::LengthMismatch(centers.len(), values.len()));
    }
    let grid = Raster::from_vec(g, g, values)?;
    grid.validate_finite()?;
    Ok(grid)
}

/// Forward Euler integration over `t_k = k/T`, `k = 0..T−1`, with the
/// configured velocity rescaling and clamping to `[0,1]²` after each step.
/// Returns `T + 1` points including `x0`.
pub fn euler_rollout(
    grid: &FlowFieldGrid,
    x0: NormPoint,
    cfg: &RolloutConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    grid.validate_finite()?;
    let steps = cfg.steps;
    let dt = 1.0 / steps as f64;
    let mut x = x0;
    let mut points = Vec::with_capacity(steps + 1);
    points.push(x);
    for k in 0..steps {
        let t = k as f64 / steps as f64;
        let v = grid.sample(x);
        let scaled = match cfg.mode {
            RolloutMode::Stabilized => {
                let s = cfg.stabilizer(t);
                [v[0] / s, v[1] / s]
            }
            RolloutMode::RawInverse => {
                // t never reaches 1 for k < T; the cap documents the guard
                let t = t.min((steps - 1) as f64 / steps as f64);
                [v[0] / (1.0 - t), v[1] / (1.0 - t)]
            }
            RolloutMode::UnitSpeed => {
                let n = libm::hypot(v[0], v[1]) + cfg.epsilon;
                [v[0] / n, v[1] / n]
            }
        };
        x = NormPoint::new(x.u() + scaled[0] * dt, x.v() + scaled[1] * dt);
        points.push(x);
    }
    Ok(Trajectory::new(points))
}

/// Queries `provider` on the configured grid and rolls out from `x0`.
pub fn rollout_from_provider<P: FieldProvider + ?Sized>(
    provider: &P,
    x0: NormPoint,
    cfg: &RolloutConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    let grid = query_grid(provider, cfg.grid_size)?;
    euler_rollout(&grid, x0, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_field_stays_put() {
        let grid = FlowFieldGrid::filled(4, 4, [0.0, 0.0]);
        let x0 = NormPoint::new(0.3, 0.6);
        for mode in RolloutMode::ALL {
            let cfg = RolloutConfig {
                mode,
                ..Default::default()
            };
            let traj = euler_rollout(&grid, x0, &cfg).unwrap();
            assert_eq!(traj.len(), 101);
            assert!(traj.points().iter().all(|p| *p == x0));
        }
    }

    #[test]
    fn rejects_non_finite_grid() {
        let mut grid = FlowFieldGrid::filled(4, 4, [0.0, 0.0]);
        grid.set(0, 3, [0.0, f64::INFINITY]);
        assert!(matches!(
            euler_rollout(&grid, NormPoint::new(0.5, 0.5), &RolloutConfig::default()),
            Err(Error::NonFiniteField { x: 0, y: 3 })
        ));
    }

    #[test]
    fn clamps_to_unit_square() {
        let grid = FlowFieldGrid::filled(3, 3, [5.0, -5.0]);
        for mode in RolloutMode::ALL {
            let cfg = RolloutConfig {
                mode,
                steps: 17,
                ..Default::default()
            };
            let traj = euler_rollout(&grid, NormPoint::new(0.9, 0.1), &cfg).unwrap();
            assert_eq!(traj.last().unwrap().to_array(), [1.0, 0.0]);
        }
    }

    #[test]
    fn config_validation_and_parsing() {
        RolloutConfig::default().validate().unwrap();
        assert!(RolloutConfig {
            steps: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(RolloutConfig {
            grid_size: 1,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(RolloutConfig {
            beta: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert_eq!(
            "raw_inverse".parse::<RolloutMode>().unwrap(),
            RolloutMode::RawInverse
        );
        assert!("fast".parse::<RolloutMode>().is_err());
    }

    #[test]
    fn constant_field_grid_is_constant() {
        let field = FlowFieldGrid::filled(7, 5, [0.25, -0.5]);
        for g in [2, 3, 10] {
            let grid = query_grid(&field, g).unwrap();
            assert_eq!(grid.dims(), (g, g));
            assert!(grid.as_slice().iter().all(|v| *v == [0.25, -0.5]));
        }
    }
}
