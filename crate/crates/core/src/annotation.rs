//! Dataset labeling: passing candidates become per-point binary score maps
//! via ball queries around each contact, plus nearest-neighbor patch crops
//! for training-style samples.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::geometry::{Point3, PointCloud, PointIndex};
use crate::{Error, Result};

/// Default annotation ball radius, m (the cup contact footprint).
pub const ANNOTATION_RADIUS: f64 = 0.015;

/// Per-point scores parallel to a cloud. Ground-truth maps are binary.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMap {
    pub scores: Vec<f64>,
    /// For each positive point, which candidates put it there (optional).
    pub sources: Option<Vec<Vec<usize>>>,
}

impl ScoreMap {
    pub fn zeros(len: usize) -> ScoreMap {
        ScoreMap {
            scores: vec![0.0; len],
            sources: None,
        }
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.scores.iter().filter(|&&s| s > 0.0).count()
    }
}

/// Marks every point within `radius` of any passing candidate's contact
/// point with score 1; overlapping balls stay binary. `contacts` are the
/// translations of candidates with Q = 1, paired with their candidate ids.
pub fn annotate_scores(
    cloud: &PointCloud,
    index: &PointIndex,
    contacts: &[(usize, Point3)],
    radius: f64,
) -> Result<ScoreMap> {
    if radius <= 0.0 || radius.is_nan() {
        return Err(Error::invalid("annotation radius must be positive"));
    }
    if index.len() != cloud.len() {
        return Err(Error::DimensionMismatch(
            "spatial index does not match cloud".into(),
        ));
    }
    let mut scores = vec![0.0f64; cloud.len()];
    let mut sources = vec![Vec::new(); cloud.len()];
    for (cand_id, t) in contacts {
        for i in index.ball_query(t, radius)? {
            scores[i] = 1.0;
            sources[i].push(*cand_id);
        }
    }
    Ok(ScoreMap {
        scores,
        sources: Some(sources),
    })
}

/// Crops `n_patches` training patches: uniformly drawn centroids, each with
/// its `points_per_patch` nearest points and their scores. Deterministic for
/// a fixed seed.
pub fn crop_patches(
    cloud: &PointCloud,
    map: &ScoreMap,
    n_patches: usize,
    points_per_patch: usize,
    rng_seed: u64,
) -> Result<Vec<(PointCloud, ScoreMap)>> {
    if map.len() != cloud.len() {
        return Err(Error::DimensionMismatch(
            "score map does not match cloud".into(),
        ));
    }
    if cloud.len() < points_per_patch {
        return Err(Error::TooFewPoints {
            have: cloud.len(),
            need: points_per_patch,
        });
    }
    if n_patches == 0 {
        return Err(Error::invalid("need at least one patch"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut centroid_ids: Vec<usize> = (0..cloud.len()).collect();
    centroid_ids.shuffle(&mut rng);
    centroid_ids.truncate(n_patches);

    let index = PointIndex::build(&cloud.points);
    let mut out = Vec::with_capacity(n_patches);
    for centroid in centroid_ids {
        let picked = index.knn(&cloud.points[centroid], points_per_patch);
        let patch_cloud = PointCloud::new(
            picked.iter().map(|&i| cloud.points[i]).collect(),
            cloud
                .normals
                .as_ref()
                .map(|ns| picked.iter().map(|&i| ns[i]).collect()),
            cloud
                .instance_labels
                .as_ref()
                .map(|ls| picked.iter().map(|&i| ls[i]).collect()),
        )?;
        let patch_map = ScoreMap {
            scores: picked.iter().map(|&i| map.scores[i]).collect(),
            sources: map
                .sources
                .as_ref()
                .map(|s| picked.iter().map(|&i| s[i].clone()).collect()),
        };
        out.push((patch_cloud, patch_map));
    }
    Ok(out)
}

/// Union of all candidate ids contributing to positive points, ascending.
pub fn contributing_candidates(map: &ScoreMap) -> Vec<usize> {
    let mut set = BTreeSet::new();
    if let Some(sources) = &map.sources {
        for s in sources {
            set.extend(s.iter().copied());
        }
    }
    set.into_iter().collect()
}
