//! Object-aware suction candidate generation: farthest point sampling over
//! each labeled object's points and a Darboux frame per contact from the
//! eigendecomposition of the neighborhood normal outer-product matrix.

use nalgebra::Matrix3;

use crate::geometry::{
    farthest_point_sampling, Point3, PointCloud, PointIndex, Pose6D, UnitVec3, Vec3,
};
use crate::{Error, Result};

/// A 6D suction grasp candidate. Rotation columns are the Darboux axes
/// `[v1 | v2 | v3]` with v1 the outward surface normal at the contact point;
/// the translation is the contact point itself.
#[derive(Debug, Clone, Copy)]
pub struct SuctionCandidate {
    pub pose: Pose6D,
    pub instance_id: u32,
    /// Index of the contact point in the sampled cloud.
    pub contact_index: usize,
}

impl SuctionCandidate {
    pub fn contact_point(&self) -> Point3 {
        Point3::from(self.pose.translation)
    }

    /// Outward surface normal at the contact (first Darboux axis).
    pub fn surface_normal(&self) -> UnitVec3 {
        UnitVec3::new_normalize(self.pose.rotation.column(0).into_owned())
    }

    /// Direction the cup travels to reach the surface: opposite the outward
    /// normal.
    pub fn approach_axis(&self) -> UnitVec3 {
        UnitVec3::new_normalize(-self.pose.rotation.column(0).into_owned())
    }

    /// Cup pose for ray casting: same contact point, x-axis flipped to point
    /// into the surface (a half-turn about the local v3 axis, so the frame
    /// stays right-handed).
    pub fn cup_pose(&self) -> Pose6D {
        let r = &self.pose.rotation;
        let mut m = Matrix3::zeros();
        m.set_column(0, &(-r.column(0)));
        m.set_column(1, &(-r.column(1)));
        m.set_column(2, &r.column(2).into_owned());
        Pose6D {
            rotation: m,
            translation: self.pose.translation,
        }
    }
}

/// Sampler parameters. `frame_radius` defaults to the 15 mm cup radius so the
/// frame reflects geometry at the seal footprint scale.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    pub samples_per_object: usize,
    pub frame_radius: f64,
    pub min_neighbors: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            samples_per_object: 100,
            frame_radius: 0.015,
            min_neighbors: 5,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples_per_object == 0 {
            return Err(Error::invalid("samples_per_object must be >= 1"));
        }
        if self.frame_radius <= 0.0 || self.frame_radius.is_nan() {
            return Err(Error::invalid("frame_radius must be positive"));
        }
        Ok(())
    }
}

/// Frame-fitting diagnostics for one contact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameFit {
    /// Frame from the eigendecomposition of N(t).
    Eigen,
    /// N(t) was isotropic; frame is an orthonormal completion of the normal.
    DegenerateFallback,
}

/// Builds the Darboux frame at `point_index` from normals within
/// `frame_radius`: v1 is the largest-eigenvalue eigenvector of
/// `N = sum n n^T` (sign-matched to the point's own normal), v3 the
/// smallest, and v2 = v3 x v1, which forces a right-handed orthonormal
/// frame. Errors when fewer than `min_neighbors` points fall in the ball;
/// an isotropic N falls back to a completion of the point normal and is
/// flagged.
pub fn darboux_frame(
    cloud: &PointCloud,
    index: &PointIndex,
    point_index: usize,
    frame_radius: f64,
    min_neighbors: usize,
) -> Result<(Matrix3<f64>, FrameFit)> {
    let normals = cloud.normals()?;
    if point_index >= cloud.len() {
        return Err(Error::invalid(format!(
            "point index {point_index} out of range"
        )));
    }
    let neighbors = index.ball_query(&cloud.points[point_index], frame_radius)?;
    if neighbors.len() < min_neighbors {
        return Err(Error::TooFewPoints {
            have: neighbors.len(),
            need: min_neighbors,
        });
    }
    let mut n_mat = Matrix3::zeros();
    for &i in &neighbors {
        let n = normals[i].into_inner();
        n_mat += n * n.transpose();
    }
    let point_normal = normals[point_index].into_inner();
    let eig = n_mat.symmetric_eigen();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let spread = eig.eigenvalues[order[0]] - eig.eigenvalues[order[2]];
    if spread < 1e-9 {
        return Ok((normal_completion(&point_normal), FrameFit::DegenerateFallback));
    }

    let mut v1 = eig.eigenvectors.column(order[0]).into_owned();
    if v1.dot(&point_normal) < 0.0 {
        v1 = -v1;
    }
    let mut v3 = eig.eigenvectors.column(order[2]).into_owned();
    // Eigenvectors carry an arbitrary sign; resolve v3 from the neighborhood
    // itself so the frame transforms rigidly with the cloud. Third moments
    // vanish on symmetric patches, hence the cascade.
    let m_normal: f64 = neighbors
        .iter()
        .map(|&i| normals[i].dot(&v3).powi(3))
        .sum();
    let sign_src = if m_normal.abs() > 1e-9 {
        m_normal
    } else {
        let p0 = cloud.points[point_index];
        let m_pos: f64 = neighbors
            .iter()
            .map(|&i| (cloud.points[i] - p0).dot(&v3).powi(3))
            .sum();
        if m_pos.abs() > 1e-15 {
            m_pos
        } else {
            let mut c = 0;
            for a in 1..3 {
                if v3[a].abs() > v3[c].abs() {
                    c = a;
                }
            }
            v3[c]
        }
    };
    if sign_src < 0.0 {
        v3 = -v3;
    }
    // Orthogonalize v3 against v1 in case of numerical drift, then derive v2.
    v3 -= v1 * v1.dot(&v3);
    let v3 = UnitVec3::new_normalize(v3).into_inner();
    let v1 = UnitVec3::new_normalize(v1).into_inner();
    let v2 = v3.cross(&v1);
    let mut r = Matrix3::zeros();
    r.set_column(0, &v1);
    r.set_column(1, &v2);
    r.set_column(2, &v3);
    Ok((r, FrameFit::Eigen))
}

/// Any right-handed orthonormal frame with `normal` as its first column.
fn normal_completion(normal: &Vec3) -> Matrix3<f64> {
    let v1 = UnitVec3::new_normalize(*normal).into_inner();
    let pick = if v1.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let v3 = UnitVec3::new_normalize(v1.cross(&pick)).into_inner();
    let v2 = v3.cross(&v1);
    let mut r = Matrix3::zeros();
    r.set_column(0, &v1);
    r.set_column(1, &v2);
    r.set_column(2, &v3);
    r
}

/// Per-run sampler diagnostics.
#[derive(Debug, Clone, Default)]
pub struct SamplerReport {
    /// (instance id, points available, candidates produced)
    pub per_object: Vec<(u32, usize, usize)>,
    /// Objects with fewer points than `samples_per_object`.
    pub clamped_objects: Vec<u32>,
    /// Contacts whose frame came from the degenerate fallback.
    pub fallback_frames: usize,
    /// Contacts with fewer than `min_neighbors` in the frame ball.
    pub sparse_frames: usize,
}

/// Samples suction candidates per labeled object: FPS selects
/// `samples_per_object` contacts from each instance's own points (never the
/// ground plane), and every contact gets a Darboux frame. Contacts whose
/// neighborhood is too sparse or isotropic fall back to a
/// normal-completion frame and are counted in the report.
pub fn generate_candidates(
    scene_cloud: &PointCloud,
    config: &SamplerConfig,
) -> Result<(Vec<SuctionCandidate>, SamplerReport)> {
    config.validate()?;
    let labels = scene_cloud.labels()?;
    let normals = scene_cloud.normals()?;
    let mut report = SamplerReport::default();
    let mut candidates = Vec::new();

    for instance_id in scene_cloud.object_labels()? {
        let global_indices: Vec<usize> = (0..scene_cloud.len())
            .filter(|&i| labels[i] == instance_id)
            .collect();
        let object_cloud = PointCloud::new(
            global_indices
                .iter()
                .map(|&i| scene_cloud.points[i])
                .collect(),
            Some(global_indices.iter().map(|&i| normals[i]).collect()),
            None,
        )?;
        let k = config.samples_per_object.min(object_cloud.len());
        if k < config.samples_per_object {
            report.clamped_objects.push(instance_id);
        }
        let object_index = PointIndex::build(&object_cloud.points);
        let selected = farthest_point_sampling(&object_cloud, k, 0)?;
        for local in selected {
            let (rotation, fit) = match darboux_frame(
                &object_cloud,
                &object_index,
                local,
                config.frame_radius,
                config.min_neighbors,
            ) {
                Ok(pair) => pair,
                Err(Error::TooFewPoints { .. }) => {
                    report.sparse_frames += 1;
                    (
                        normal_completion(&normals[global_indices[local]].into_inner()),
                        FrameFit::DegenerateFallback,
                    )
                }
                Err(e) => return Err(e),
            };
            if fit == FrameFit::DegenerateFallback {
                report.fallback_frames += 1;
            }
            candidates.push(SuctionCandidate {
                pose: Pose6D {
                    rotation,
                    translation: object_cloud.points[local].coords,
                },
                instance_id,
                contact_index: global_indices[local],
            });
        }
        report.per_object.push((instance_id, object_cloud.len(), k));
    }
    Ok((candidates, report))
}
