//! Suction-grasp geometry pipeline: object-aware candidate sampling on labeled
//! point clouds, ray-cast seal and collision gates, a quasi-static wrench gate
//! over pile loads, ball-query score-map annotation, a normal-variance
//! affordance baseline, and online precision metrics.
//!
//! Everything is metric: meters, kilograms, newtons. Clouds, meshes and scenes
//! are immutable after construction; spatial indices are build-once/read-many
//! and safe to share across threads.

pub mod annotation;
pub mod config;
pub mod cup;
pub mod fixtures;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod policy;
pub mod sampling;
pub mod seal;
pub mod wrench;

pub use geometry::{
    CameraIntrinsics, PointCloud, PointIndex, Pose6D, SceneIndex, SceneModel, SceneObject,
    TriangleMesh,
};

/// Standard gravity, m/s^2.
pub const GRAVITY: f64 = 9.80665;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("too few points: have {have}, need {need}")]
    TooFewPoints { have: usize, need: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("point cloud is missing normals")]
    MissingNormals,
    #[error("point cloud is missing instance labels")]
    MissingLabels,
    #[error("unknown instance id {0}")]
    UnknownInstance(u32),
    #[error("unknown cup preset {0:?}")]
    UnknownPreset(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("schema violation at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            message: message.into(),
        }
    }
}
