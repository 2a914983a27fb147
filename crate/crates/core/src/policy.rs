//! Heuristic affordance baseline and ranking: normal-variance flatness
//! scoring with ground removal, a safety-margin filter against neighboring
//! objects, and confidence-ordered ranking.

use crate::annotation::ScoreMap;
use crate::geometry::{PointCloud, PointIndex, SceneIndex, Vec3};
use crate::sampling::SuctionCandidate;
use crate::{Error, Result};

/// A candidate with its confidence and 1-based rank.
#[derive(Debug, Clone)]
pub struct RankedGrasp {
    pub candidate: SuctionCandidate,
    pub confidence: f64,
    pub rank: usize,
}

/// Flatness affordance: for each object point, the neighborhood normal
/// dispersion is `v = mean(1 - n_i . n_mean)` with `n_mean` the normalized
/// mean neighbor normal, and the score is `1 - v` (the mean resultant
/// length, in [0,1]). Ground-plane points (label 0) score 0.
pub fn normal_variance_affordance(
    cloud: &PointCloud,
    index: &PointIndex,
    radius: f64,
) -> Result<ScoreMap> {
    if radius <= 0.0 || radius.is_nan() {
        return Err(Error::invalid("affordance radius must be positive"));
    }
    let normals = cloud.normals()?;
    let labels = cloud.labels()?;
    let mut scores = vec![0.0f64; cloud.len()];
    for (i, score) in scores.iter_mut().enumerate() {
        if labels[i] == 0 {
            continue;
        }
        let neighbors = index.ball_query(&cloud.points[i], radius)?;
        let mut sum = Vec3::zeros();
        for &j in &neighbors {
            sum += normals[j].into_inner();
        }
        // |mean of unit normals| = 1 - dispersion; an exactly cancelling
        // neighborhood scores 0.
        *score = sum.norm() / neighbors.len() as f64;
    }
    Ok(ScoreMap {
        scores,
        sources: None,
    })
}

/// Removes candidates whose contact point lies within `margin` of another
/// instance's mesh surface. Survivors keep their order.
pub fn safety_margin_filter(
    index: &SceneIndex,
    cands: &[SuctionCandidate],
    margin: f64,
) -> Result<Vec<SuctionCandidate>> {
    if margin < 0.0 {
        return Err(Error::invalid("safety margin must be >= 0"));
    }
    if margin == 0.0 {
        return Ok(cands.to_vec());
    }
    Ok(cands
        .iter()
        .filter(|c| {
            index
                .distance_to_others(&c.contact_point(), c.instance_id, margin)
                .is_none()
        })
        .copied()
        .collect())
}

/// Binds each candidate to the score of its contact point.
pub fn confidences_from_map(
    cands: &[SuctionCandidate],
    map: &ScoreMap,
) -> Result<Vec<f64>> {
    cands
        .iter()
        .map(|c| {
            map.scores.get(c.contact_index).copied().ok_or_else(|| {
                Error::invalid(format!(
                    "candidate contact index {} outside score map",
                    c.contact_index
                ))
            })
        })
        .collect()
}

/// Stable descending sort by confidence; exact ties break to the lower
/// contact index. Rank is the 1-based output position.
pub fn rank_candidates(
    cands: &[SuctionCandidate],
    confidences: &[f64],
) -> Result<Vec<RankedGrasp>> {
    if cands.len() != confidences.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} candidates but {} confidences",
            cands.len(),
            confidences.len()
        )));
    }
    for (i, c) in confidences.iter().enumerate() {
        if !c.is_finite() {
            return Err(Error::invalid(format!("confidence {i} is not finite")));
        }
    }
    let mut order: Vec<usize> = (0..cands.len()).collect();
    order.sort_by(|&a, &b| {
        confidences[b]
            .total_cmp(&confidences[a])
            .then(cands[a].contact_index.cmp(&cands[b].contact_index))
    });
    Ok(order
        .iter()
        .enumerate()
        .map(|(pos, &i)| RankedGrasp {
            candidate: cands[i],
            confidence: confidences[i],
            rank: pos + 1,
        })
        .collect())
}
