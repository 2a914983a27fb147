use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Point3, PointCloud, TriangleMesh, UnitVec3, Vec3};
use crate::{Error, Result};

/// Draws `n` area-uniform surface samples with analytic face normals.
/// Deterministic for a fixed seed.
pub fn sample_mesh_surface(mesh: &TriangleMesh, n: usize, rng_seed: u64) -> Result<PointCloud> {
    if n == 0 {
        return Err(Error::invalid("sample count must be >= 1"));
    }
    if mesh.is_empty() {
        return Err(Error::invalid("cannot sample an empty mesh"));
    }
    let mut cumulative = Vec::with_capacity(mesh.triangles.len());
    let mut total = 0.0;
    for i in 0..mesh.triangles.len() {
        total += mesh.triangle_area(i);
        cumulative.push(total);
    }
    if total <= 0.0 {
        return Err(Error::invalid("mesh has zero surface area"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut points = Vec::with_capacity(n);
    let mut normals = Vec::with_capacity(n);
    for _ in 0..n {
        let target = rng.random::<f64>() * total;
        let tri = cumulative.partition_point(|&c| c < target).min(cumulative.len() - 1);
        let [a, b, c] = mesh.triangle_vertices(tri);
        // sqrt trick for a uniform barycentric draw.
        let r1: f64 = rng.random();
        let r2: f64 = rng.random();
        let s = r1.sqrt();
        let p = a.coords * (1.0 - s) + b.coords * (s * (1.0 - r2)) + c.coords * (s * r2);
        points.push(Point3::from(p));
        normals.push(UnitVec3::new_normalize((b - a).cross(&(c - a))));
    }
    PointCloud::new(points, Some(normals), None)
}

/// Uniform-density centroid of a closed mesh via signed tetrahedra; falls
/// back to the area-weighted surface centroid when the enclosed volume is
/// numerically zero (open or flat geometry).
pub fn mesh_volume_centroid(mesh: &TriangleMesh) -> Point3 {
    let mut volume = 0.0;
    let mut moment = Vec3::zeros();
    for i in 0..mesh.triangles.len() {
        let [a, b, c] = mesh.triangle_vertices(i);
        let v = a.coords.dot(&b.coords.cross(&c.coords)) / 6.0;
        volume += v;
        moment += (a.coords + b.coords + c.coords) * (v / 4.0);
    }
    if volume.abs() > 1e-12 {
        return Point3::from(moment / volume);
    }
    let mut area = 0.0;
    let mut centroid = Vec3::zeros();
    for i in 0..mesh.triangles.len() {
        let [a, b, c] = mesh.triangle_vertices(i);
        let w = mesh.triangle_area(i);
        area += w;
        centroid += (a.coords + b.coords + c.coords) * (w / 3.0);
    }
    if area > 0.0 {
        Point3::from(centroid / area)
    } else {
        Point3::origin()
    }
}
