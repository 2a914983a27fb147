use super::PointCloud;
use crate::{Error, Result};

/// Deterministic greedy max-min farthest point sampling.
///
/// Starts at `seed_index`; every subsequent pick maximizes the distance to the
/// already-selected set, with exact-tie breaks to the lowest index. The result
/// depends only on (cloud, k, seed_index).
pub fn farthest_point_sampling(
    cloud: &PointCloud,
    k: usize,
    seed_index: usize,
) -> Result<Vec<usize>> {
    let n = cloud.len();
    if k == 0 || k > n {
        return Err(Error::invalid(format!(
            "sample count {k} out of range for {n} points"
        )));
    }
    if seed_index >= n {
        return Err(Error::invalid(format!(
            "seed index {seed_index} out of range for {n} points"
        )));
    }
    let pts = &cloud.points;
    let mut selected = Vec::with_capacity(k);
    let mut min_d2 = vec![f64::INFINITY; n];
    let mut current = seed_index;
    selected.push(current);
    for _ in 1..k {
        let cp = pts[current];
        let mut best = 0usize;
        let mut best_d2 = f64::NEG_INFINITY;
        for (i, d2) in min_d2.iter_mut().enumerate() {
            let cand = (pts[i] - cp).norm_squared();
            if cand < *d2 {
                *d2 = cand;
            }
            if *d2 > best_d2 {
                best_d2 = *d2;
                best = i;
            }
        }
        current = best;
        selected.push(current);
    }
    Ok(selected)
}
