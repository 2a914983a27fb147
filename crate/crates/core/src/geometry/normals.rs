use nalgebra::Matrix3;

use super::{Point3, PointCloud, PointIndex, UnitVec3, Vec3};
use crate::{Error, Result};

/// Estimates a unit normal per point from the best-fit plane of its k nearest
/// neighbors (smallest-eigenvalue eigenvector of the neighborhood covariance),
/// sign-flipped to face `viewpoint`.
pub fn estimate_normals(cloud: &PointCloud, k: usize, viewpoint: &Point3) -> Result<PointCloud> {
    if k < 3 {
        return Err(Error::invalid("normal estimation needs k >= 3"));
    }
    if cloud.len() < k {
        return Err(Error::TooFewPoints {
            have: cloud.len(),
            need: k,
        });
    }
    let index = PointIndex::build(&cloud.points);
    let normals: Vec<UnitVec3> = cloud
        .points
        .iter()
        .map(|p| {
            let nb = index.knn(p, k);
            let mut centroid = Vec3::zeros();
            for &i in &nb {
                centroid += cloud.points[i].coords;
            }
            centroid /= nb.len() as f64;
            let mut cov = Matrix3::zeros();
            for &i in &nb {
                let d = cloud.points[i].coords - centroid;
                cov += d * d.transpose();
            }
            let eig = cov.symmetric_eigen();
            let mut min_i = 0;
            for i in 1..3 {
                if eig.eigenvalues[i] < eig.eigenvalues[min_i] {
                    min_i = i;
                }
            }
            let mut n = eig.eigenvectors.column(min_i).into_owned();
            if n.dot(&(viewpoint - p)) < 0.0 {
                n = -n;
            }
            UnitVec3::new_normalize(n)
        })
        .collect();
    PointCloud::new(
        cloud.points.clone(),
        Some(normals),
        cloud.instance_labels.clone(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coplanar_points_get_plane_normal() {
        let mut pts = Vec::new();
        for i in 0..10 {
            for j in 0..10 {
                pts.push(Point3::new(i as f64 * 0.01, j as f64 * 0.01, 0.0));
            }
        }
        let cloud = PointCloud::from_points(pts);
        let out = estimate_normals(&cloud, 8, &Point3::new(0.0, 0.0, 1.0)).unwrap();
        for n in out.normals().unwrap() {
            assert!((n.z - 1.0).abs() < 1e-9, "normal {n:?} not +z");
        }
    }

    #[test]
    fn too_few_points_is_an_error() {
        let cloud = PointCloud::from_points(vec![Point3::origin(), Point3::new(1.0, 0.0, 0.0)]);
        match estimate_normals(&cloud, 3, &Point3::origin()) {
            Err(Error::TooFewPoints { have: 2, need: 3 }) => {}
            other => panic!("expected TooFewPoints, got {other:?}"),
        }
        assert!(estimate_normals(&cloud, 2, &Point3::origin()).is_err());
    }
}
