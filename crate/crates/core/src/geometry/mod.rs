//! Foundational geometry: point clouds, triangle meshes, spatial indices,
//! normal estimation, farthest point sampling, depth back-projection and
//! multi-view fusion.

mod bvh;
mod depth;
mod fps;
mod kdtree;
mod merge;
mod normals;
mod surface;
mod types;

pub use bvh::{RayHit, SceneIndex};
pub use depth::{camera_center, depth_to_pointcloud, DepthImage};
pub use fps::farthest_point_sampling;
pub use kdtree::PointIndex;
pub use merge::merge_views;
pub use normals::estimate_normals;
pub use surface::{mesh_volume_centroid, sample_mesh_surface};
pub use types::{
    CameraIntrinsics, CleanStats, PointCloud, Pose6D, SceneModel, SceneObject, TriangleMesh,
};

pub type Point3 = nalgebra::Point3<f64>;
pub type Vec3 = nalgebra::Vector3<f64>;
pub type UnitVec3 = nalgebra::Unit<nalgebra::Vector3<f64>>;
