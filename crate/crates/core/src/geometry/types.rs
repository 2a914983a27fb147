use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use super::{Point3, UnitVec3, Vec3};
use crate::{Error, Result};

const ROTATION_TOL: f64 = 1e-6;
const UNIT_TOL: f64 = 1e-6;

/// Rigid transform: orthonormal rotation (det +1) plus a translation in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose6D {
    pub rotation: Matrix3<f64>,
    pub translation: Vec3,
}

impl Pose6D {
    pub fn identity() -> Self {
        Pose6D {
            rotation: Matrix3::identity(),
            translation: Vec3::zeros(),
        }
    }

    /// Validates orthonormality and det = +1 to 1e-6.
    pub fn new(rotation: Matrix3<f64>, translation: Vec3) -> Result<Self> {
        let rtr = rotation.transpose() * rotation;
        let dev = (rtr - Matrix3::identity()).norm();
        if dev > ROTATION_TOL * 10.0 {
            return Err(Error::invalid(format!(
                "rotation is not orthonormal (|R^T R - I| = {dev:.2e})"
            )));
        }
        let det = rotation.determinant();
        if (det - 1.0).abs() > 1e-4 {
            return Err(Error::invalid(format!(
                "rotation determinant is {det}, expected +1"
            )));
        }
        Ok(Pose6D {
            rotation,
            translation,
        })
    }

    /// Builds from 9 row-major rotation entries plus a translation triple.
    pub fn from_row_major(rot: &[f64; 9], t: &[f64; 3]) -> Result<Self> {
        let rotation = Matrix3::new(
            rot[0], rot[1], rot[2], rot[3], rot[4], rot[5], rot[6], rot[7], rot[8],
        );
        Pose6D::new(rotation, Vec3::new(t[0], t[1], t[2]))
    }

    pub fn rotation_row_major(&self) -> [f64; 9] {
        let r = &self.rotation;
        [
            r[(0, 0)],
            r[(0, 1)],
            r[(0, 2)],
            r[(1, 0)],
            r[(1, 1)],
            r[(1, 2)],
            r[(2, 0)],
            r[(2, 1)],
            r[(2, 2)],
        ]
    }

    pub fn transform_point(&self, p: &Point3) -> Point3 {
        Point3::from(self.rotation * p.coords + self.translation)
    }

    pub fn transform_vector(&self, v: &Vec3) -> Vec3 {
        self.rotation * v
    }

    pub fn inverse(&self) -> Pose6D {
        let rt = self.rotation.transpose();
        Pose6D {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// `self` applied after `other`.
    pub fn compose(&self, other: &Pose6D) -> Pose6D {
        Pose6D {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }
}

/// A registered scene observation: positions, optional unit normals, optional
/// per-point instance labels (label 0 is reserved for the ground plane).
#[derive(Debug, Clone, Default)]
pub struct PointCloud {
    pub points: Vec<Point3>,
    pub normals: Option<Vec<UnitVec3>>,
    pub instance_labels: Option<Vec<u32>>,
}

impl PointCloud {
    pub fn from_points(points: Vec<Point3>) -> Self {
        PointCloud {
            points,
            normals: None,
            instance_labels: None,
        }
    }

    /// Validates the parallel-array and unit-norm invariants.
    pub fn new(
        points: Vec<Point3>,
        normals: Option<Vec<UnitVec3>>,
        instance_labels: Option<Vec<u32>>,
    ) -> Result<Self> {
        if let Some(n) = &normals {
            if n.len() != points.len() {
                return Err(Error::DimensionMismatch(format!(
                    "{} normals for {} points",
                    n.len(),
                    points.len()
                )));
            }
            for (i, nv) in n.iter().enumerate() {
                if (nv.norm() - 1.0).abs() > UNIT_TOL {
                    return Err(Error::invalid(format!("normal {i} is not unit length")));
                }
            }
        }
        if let Some(l) = &instance_labels {
            if l.len() != points.len() {
                return Err(Error::DimensionMismatch(format!(
                    "{} labels for {} points",
                    l.len(),
                    points.len()
                )));
            }
        }
        Ok(PointCloud {
            points,
            normals,
            instance_labels,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn normals(&self) -> Result<&[UnitVec3]> {
        self.normals.as_deref().ok_or(Error::MissingNormals)
    }

    pub fn labels(&self) -> Result<&[u32]> {
        self.instance_labels.as_deref().ok_or(Error::MissingLabels)
    }

    /// Distinct object labels present (> 0), ascending.
    pub fn object_labels(&self) -> Result<Vec<u32>> {
        let mut ids: Vec<u32> = self
            .labels()?
            .iter()
            .copied()
            .filter(|&l| l > 0)
            .collect();
        ids.sort_unstable();
        ids.dedup();
        Ok(ids)
    }
}

/// Dropped-face statistics from mesh cleaning.
#[derive(Debug, Clone, Copy, Default)]
pub struct CleanStats {
    pub degenerate_dropped: usize,
}

/// Indexed triangle mesh in meters. Construction drops zero-area faces.
#[derive(Debug, Clone)]
pub struct TriangleMesh {
    pub vertices: Vec<Point3>,
    pub triangles: Vec<[u32; 3]>,
}

impl TriangleMesh {
    /// Validates indices and drops degenerate (zero-area) faces.
    pub fn new(vertices: Vec<Point3>, triangles: Vec<[u32; 3]>) -> Result<(Self, CleanStats)> {
        let n = vertices.len() as u32;
        let mut kept = Vec::with_capacity(triangles.len());
        let mut dropped = 0usize;
        for (i, t) in triangles.iter().enumerate() {
            if t[0] >= n || t[1] >= n || t[2] >= n {
                return Err(Error::invalid(format!(
                    "triangle {i} references vertex out of range"
                )));
            }
            let a = vertices[t[0] as usize];
            let b = vertices[t[1] as usize];
            let c = vertices[t[2] as usize];
            let area2 = (b - a).cross(&(c - a)).norm();
            if area2 > 1e-14 {
                kept.push(*t);
            } else {
                dropped += 1;
            }
        }
        Ok((
            TriangleMesh {
                vertices,
                triangles: kept,
            },
            CleanStats {
                degenerate_dropped: dropped,
            },
        ))
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn triangle_vertices(&self, idx: usize) -> [Point3; 3] {
        let t = self.triangles[idx];
        [
            self.vertices[t[0] as usize],
            self.vertices[t[1] as usize],
            self.vertices[t[2] as usize],
        ]
    }

    pub fn triangle_area(&self, idx: usize) -> f64 {
        let [a, b, c] = self.triangle_vertices(idx);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.triangles.len())
            .map(|i| self.triangle_area(i))
            .sum()
    }

    pub fn transformed(&self, pose: &Pose6D) -> TriangleMesh {
        TriangleMesh {
            vertices: self
                .vertices
                .iter()
                .map(|v| pose.transform_point(v))
                .collect(),
            triangles: self.triangles.clone(),
        }
    }
}

/// Pinhole camera intrinsics in pixels.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl CameraIntrinsics {
    pub fn validate(&self) -> Result<()> {
        if self.fx <= 0.0 || self.fy <= 0.0 {
            return Err(Error::invalid("focal lengths must be positive"));
        }
        if self.cx < 0.0 || self.cx >= self.width as f64 {
            return Err(Error::invalid("cx outside image"));
        }
        if self.cy < 0.0 || self.cy >= self.height as f64 {
            return Err(Error::invalid("cy outside image"));
        }
        Ok(())
    }
}

/// One rigid object in a scene: mesh in local frame, world pose, mass and
/// Coulomb friction coefficient.
#[derive(Debug, Clone)]
pub struct SceneObject {
    pub instance_id: u32,
    pub mesh: TriangleMesh,
    pub pose: Pose6D,
    pub mass_kg: f64,
    pub friction: f64,
}

/// The object set: ground plane at z = 0 plus posed object meshes.
#[derive(Debug, Clone)]
pub struct SceneModel {
    pub objects: Vec<SceneObject>,
    pub ground_plane: bool,
}

impl SceneModel {
    pub fn new(objects: Vec<SceneObject>, ground_plane: bool) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        for obj in &objects {
            if obj.instance_id == 0 {
                return Err(Error::invalid(
                    "instance id 0 is reserved for the ground plane",
                ));
            }
            if !seen.insert(obj.instance_id) {
                return Err(Error::invalid(format!(
                    "duplicate instance id {}",
                    obj.instance_id
                )));
            }
            if obj.mass_kg <= 0.0 || obj.mass_kg.is_nan() {
                return Err(Error::invalid(format!(
                    "instance {} has non-positive mass",
                    obj.instance_id
                )));
            }
            if !(0.0..=1.0).contains(&obj.friction) {
                return Err(Error::invalid(format!(
                    "instance {} friction outside [0,1]",
                    obj.instance_id
                )));
            }
        }
        Ok(SceneModel {
            objects,
            ground_plane,
        })
    }

    pub fn object(&self, instance_id: u32) -> Result<&SceneObject> {
        self.objects
            .iter()
            .find(|o| o.instance_id == instance_id)
            .ok_or(Error::UnknownInstance(instance_id))
    }

    /// Applies the same rigid motion to every object pose.
    pub fn transformed(&self, motion: &Pose6D) -> SceneModel {
        SceneModel {
            objects: self
                .objects
                .iter()
                .map(|o| SceneObject {
                    instance_id: o.instance_id,
                    mesh: o.mesh.clone(),
                    pose: motion.compose(&o.pose),
                    mass_kg: o.mass_kg,
                    friction: o.friction,
                })
                .collect(),
            ground_plane: self.ground_plane,
        }
    }
}
