use super::{CameraIntrinsics, Point3, PointCloud, Pose6D};
use crate::{Error, Result};

/// Row-major depth image in meters; 0 (or negative / non-finite) marks an
/// invalid pixel.
#[derive(Debug, Clone)]
pub struct DepthImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl DepthImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{} depth samples for {width}x{height} image",
                data.len()
            )));
        }
        Ok(DepthImage {
            width,
            height,
            data,
        })
    }

    pub fn at(&self, u: usize, v: usize) -> f64 {
        self.data[v * self.width + u]
    }
}

/// Back-projects a depth image through the pinhole model and into the world
/// frame. Pixel (u,v) with depth Z > 0 maps to camera point
/// ((u-cx)Z/fx, (v-cy)Z/fy, Z); invalid pixels are skipped; instance labels,
/// when given, are carried per point.
pub fn depth_to_pointcloud(
    depth: &DepthImage,
    intr: &CameraIntrinsics,
    extrinsic: &Pose6D,
    labels: Option<&[u32]>,
) -> Result<PointCloud> {
    intr.validate()?;
    if depth.width != intr.width || depth.height != intr.height {
        return Err(Error::DimensionMismatch(format!(
            "depth image {}x{} does not match intrinsics {}x{}",
            depth.width, depth.height, intr.width, intr.height
        )));
    }
    if let Some(l) = labels {
        if l.len() != depth.data.len() {
            return Err(Error::DimensionMismatch(
                "label map size does not match depth image".into(),
            ));
        }
    }
    let mut points = Vec::new();
    let mut out_labels = labels.map(|_| Vec::new());
    for v in 0..depth.height {
        for u in 0..depth.width {
            let z = depth.at(u, v);
            if z <= 0.0 || !z.is_finite() {
                continue;
            }
            let cam = Point3::new(
                (u as f64 - intr.cx) * z / intr.fx,
                (v as f64 - intr.cy) * z / intr.fy,
                z,
            );
            points.push(extrinsic.transform_point(&cam));
            if let (Some(out), Some(l)) = (&mut out_labels, labels) {
                out.push(l[v * depth.width + u]);
            }
        }
    }
    PointCloud::new(points, None, out_labels)
}

/// Camera position for a camera-to-world extrinsic: where the optical center
/// lands in the world frame.
pub fn camera_center(extrinsic: &Pose6D) -> Point3 {
    Point3::from(extrinsic.translation)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn intr(w: usize, h: usize) -> CameraIntrinsics {
        CameraIntrinsics {
            fx: 100.0,
            fy: 100.0,
            cx: 0.0,
            cy: 0.0,
            width: w,
            height: h,
        }
    }

    #[test]
    fn pinhole_center_pixel() {
        let depth = DepthImage::new(1, 1, vec![1.0]).unwrap();
        let cloud =
            depth_to_pointcloud(&depth, &intr(1, 1), &Pose6D::identity(), None).unwrap();
        assert_eq!(cloud.len(), 1);
        assert!((cloud.points[0] - Point3::new(0.0, 0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn pinhole_offset_pixel() {
        let mut data = vec![0.0; 101];
        data[100] = 2.0; // pixel u=100, v=0
        let depth = DepthImage::new(101, 1, data).unwrap();
        let cloud =
            depth_to_pointcloud(&depth, &intr(101, 1), &Pose6D::identity(), None).unwrap();
        assert_eq!(cloud.len(), 1);
        assert!((cloud.points[0] - Point3::new(2.0, 0.0, 2.0)).norm() < 1e-12);
    }

    #[test]
    fn all_zero_depth_yields_empty_cloud() {
        let depth = DepthImage::new(4, 4, vec![0.0; 16]).unwrap();
        let cloud =
            depth_to_pointcloud(&depth, &intr(4, 4), &Pose6D::identity(), None).unwrap();
        assert!(cloud.is_empty());
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let depth = DepthImage::new(4, 4, vec![1.0; 16]).unwrap();
        assert!(depth_to_pointcloud(&depth, &intr(5, 4), &Pose6D::identity(), None).is_err());
    }

    #[test]
    fn labels_are_carried() {
        let depth = DepthImage::new(2, 1, vec![1.0, 0.0]).unwrap();
        let labels = vec![7u32, 9u32];
        let cloud =
            depth_to_pointcloud(&depth, &intr(2, 1), &Pose6D::identity(), Some(&labels)).unwrap();
        assert_eq!(cloud.labels().unwrap(), &[7]);
    }
}
