use std::collections::BTreeMap;

use super::{PointCloud, UnitVec3, Vec3};
use crate::{Error, Result};

/// Concatenates clouds, then deduplicates with a voxel grid: one
/// representative per occupied voxel (the input point nearest the voxel
/// center), label by majority, normal by normalized mean. `voxel = 0`
/// disables deduplication.
pub fn merge_views(clouds: &[PointCloud], voxel: f64) -> Result<PointCloud> {
    if clouds.is_empty() {
        return Err(Error::invalid("merge_views needs at least one cloud"));
    }
    if voxel < 0.0 {
        return Err(Error::invalid("voxel size must be >= 0"));
    }
    let any_normals = clouds.iter().any(|c| c.normals.is_some());
    let all_normals = clouds.iter().all(|c| c.normals.is_some());
    let any_labels = clouds.iter().any(|c| c.instance_labels.is_some());
    let all_labels = clouds.iter().all(|c| c.instance_labels.is_some());
    if any_normals && !all_normals {
        return Err(Error::invalid("cannot merge clouds with and without normals"));
    }
    if any_labels && !all_labels {
        return Err(Error::invalid("cannot merge clouds with and without labels"));
    }

    let mut points = Vec::new();
    let mut normals = all_normals.then(Vec::new);
    let mut labels = all_labels.then(Vec::new);
    for c in clouds {
        points.extend_from_slice(&c.points);
        if let Some(ns) = &mut normals {
            ns.extend_from_slice(c.normals.as_ref().unwrap());
        }
        if let Some(ls) = &mut labels {
            ls.extend_from_slice(c.instance_labels.as_ref().unwrap());
        }
    }
    if voxel == 0.0 {
        return PointCloud::new(points, normals, labels);
    }

    // BTreeMap keyed on the voxel coordinate keeps output order deterministic.
    struct Cell {
        representative: usize,
        rep_d2: f64,
        normal_sum: Vec3,
        label_votes: BTreeMap<u32, usize>,
    }
    let mut cells: BTreeMap<(i64, i64, i64), Cell> = BTreeMap::new();
    for (i, p) in points.iter().enumerate() {
        let key = (
            (p.x / voxel).floor() as i64,
            (p.y / voxel).floor() as i64,
            (p.z / voxel).floor() as i64,
        );
        let center = Vec3::new(
            (key.0 as f64 + 0.5) * voxel,
            (key.1 as f64 + 0.5) * voxel,
            (key.2 as f64 + 0.5) * voxel,
        );
        let d2 = (p.coords - center).norm_squared();
        let cell = cells.entry(key).or_insert_with(|| Cell {
            representative: i,
            rep_d2: f64::INFINITY,
            normal_sum: Vec3::zeros(),
            label_votes: BTreeMap::new(),
        });
        if d2 < cell.rep_d2 {
            cell.rep_d2 = d2;
            cell.representative = i;
        }
        if let Some(ns) = &normals {
            cell.normal_sum += ns[i].into_inner();
        }
        if let Some(ls) = &labels {
            *cell.label_votes.entry(ls[i]).or_insert(0) += 1;
        }
    }

    let mut out_points = Vec::with_capacity(cells.len());
    let mut out_normals = normals.as_ref().map(|_| Vec::with_capacity(cells.len()));
    let mut out_labels = labels.as_ref().map(|_| Vec::with_capacity(cells.len()));
    for cell in cells.values() {
        out_points.push(points[cell.representative]);
        if let (Some(out), Some(ns)) = (&mut out_normals, &normals) {
            let sum = cell.normal_sum;
            let n = if sum.norm() > 1e-12 {
                UnitVec3::new_normalize(sum)
            } else {
                ns[cell.representative]
            };
            out.push(n);
        }
        if let Some(out) = &mut out_labels {
            // Majority vote, ties to the smallest label.
            let best = cell
                .label_votes
                .iter()
                .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
                .map(|(l, _)| *l)
                .unwrap();
            out.push(best);
        }
    }
    PointCloud::new(out_points, out_normals, out_labels)
}
