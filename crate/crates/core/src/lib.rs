//! Goal-conditioned navigation flow fields on 2D semantic maps.
//!
//! The annotation pipeline turns a labeled occupancy map and a goal into a
//! dense flow field plus a reference path. Rollout integrates any field
//! provider into a trajectory, and [`metrics`] scores it.

pub mod cli;
pub mod config;
pub mod edt;
pub mod error;
pub mod field;
pub mod geodesic;
pub mod grid;
pub mod io;
pub mod metrics;
pub mod planner;
pub mod render;
pub mod rollout;
pub mod scene;
pub mod supervision;
pub mod trajectory;

pub use error::{Error, Result, Stage};
pub use field::{
    annotate, annotate_with_stages, Annotation, AnnotationConfig, GoalSpec, Side, StartChoice,
};
pub use grid::{
    BinaryMask, FlowFieldGrid, LabelMapping, NormPoint, ObjectInstance, Pixel, PixelBox, Raster,
    ScalarField, SemanticMap,
};
pub use rollout::{euler_rollout, query_grid, FieldProvider, RolloutConfig, RolloutMode};
pub use trajectory::Trajectory;
