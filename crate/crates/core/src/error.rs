use std::fmt;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Annotation pipeline stage, attached to errors raised by [`crate::annotate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Traversability,
    Geodesic,
    Potential,
    FlowField,
    Trajectory,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Traversability => "traversability",
            Stage::Geodesic => "geodesic",
            Stage::Potential => "potential",
            Stage::FlowField => "flow-field",
            Stage::Trajectory => "trajectory",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown label {label} at pixel ({x}, {y})")]
    UnknownLabel { label: u8, x: usize, y: usize },

    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("goal set is empty")]
    EmptyGoalSet,

    #[error("none of the {0} goal pixels lies in free space")]
    NoFreeGoal(usize),

    #[error("label {0} is not targetable")]
    NotTargetable(u8),

    #[error("no instance with label {label} (instance index {index:?})")]
    TargetNotFound { label: u8, index: Option<usize> },

    #[error("target has no free pixel to approach from")]
    UnreachableGoal,

    #[error("no free pixel reaches the goal")]
    UnreachableScene,

    #[error("start pixel ({x}, {y}) cannot reach the goal")]
    UnreachableStart { x: usize, y: usize },

    #[error("no start pixel satisfies the sampling constraints")]
    NoStartCandidate,

    #[error("cost at free pixel ({x}, {y}) must be finite and > 0")]
    InvalidCost { x: usize, y: usize },

    #[error("predecessor map is inconsistent at pixel index {0}")]
    InconsistentPredecessors(usize),

    #[error("non-finite flow vector at pixel ({x}, {y})")]
    NonFiniteField { x: usize, y: usize },

    #[error("trajectory is empty")]
    EmptyTrajectory,

    #[error("reference trajectory has zero length")]
    ZeroLengthReference,

    #[error("malformed bounding box [{0}, {1}, {2}, {3}]")]
    MalformedBox(f64, f64, f64, f64),

    #[error("scene generation failed: {0}")]
    Generation(String),

    #[error("instruction error: {0}")]
    Instruction(String),

    #[error("invalid file format: {0}")]
    Format(String),

    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

impl Error {
    /// Wraps the error with the pipeline stage it came from.
    pub fn at(self, stage: Stage) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Innermost error, skipping stage wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            e => e,
        }
    }
}
