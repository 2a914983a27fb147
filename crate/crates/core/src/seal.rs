//! Seal-formation and collision gates.
//!
//! Seal: cast every cup vertex ray at the scene with a travel budget of twice
//! the rest height. The seal holds when every ray hits the target instance
//! and the hit-distance spread stays within the deformation threshold; misses
//! are leaks, foreign hits mean the rim overlaps a neighbor or the ground.
//!
//! Collision: sweep the cup's bounding cylinder backward along the approach
//! axis and fail on any foreign geometry inside that corridor.

use serde::{Deserialize, Serialize};

use crate::cup::CupModel;
use crate::geometry::{SceneIndex, UnitVec3};
use crate::sampling::SuctionCandidate;

/// Outcome of a seal evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct SealResult {
    pub passed: bool,
    /// Rays that hit anything at all.
    pub hit_count: usize,
    /// Rays cast in total (960 for the full model, 8 for the perimeter one).
    pub rays_cast: usize,
    /// max |d_i - rest_height| over the hits, m.
    pub max_deformation: f64,
    /// max d_i - min d_i over the hits, m.
    pub spread: f64,
    /// Hits on instances other than the candidate's target.
    pub foreign_hits: usize,
    /// Per-ray (distance, instance) records, when requested.
    pub diagnostics: Option<Vec<Option<(f64, u32)>>>,
}

/// Outcome of a collision check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionResult {
    pub passed: bool,
    pub blocking_instance: Option<u32>,
    /// Distance to the nearest blocking hit, or the full corridor length when
    /// clear, m.
    pub clearance: f64,
}

/// Approach-corridor parameters for the collision gate.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct CollisionParams {
    /// Extra radial clearance around the cup, m.
    pub skin: f64,
    /// How far back along the approach axis the corridor extends, m.
    pub retreat: f64,
    /// Radial ray rings sampling the corridor cross-section.
    pub radial_rings: usize,
    /// Rays per ring.
    pub angular_steps: usize,
    /// Cross-section stations along the corridor casting outward radial
    /// rays; these catch thin geometry parallel to the sweep axis that the
    /// axial rays slide past.
    pub axial_steps: usize,
}

impl Default for CollisionParams {
    fn default() -> Self {
        CollisionParams {
            skin: 0.002,
            retreat: 0.10,
            radial_rings: 4,
            angular_steps: 32,
            axial_steps: 12,
        }
    }
}

/// Full 960-vertex seal evaluation.
pub fn evaluate_seal(scene: &SceneIndex, cup: &CupModel, cand: &SuctionCandidate) -> SealResult {
    seal_impl(scene, cup, cand, SealModel::Full, false)
}

/// Full seal evaluation with per-ray diagnostics retained.
pub fn evaluate_seal_detailed(
    scene: &SceneIndex,
    cup: &CupModel,
    cand: &SuctionCandidate,
) -> SealResult {
    seal_impl(scene, cup, cand, SealModel::Full, true)
}

/// Comparison variant: only 8 equally spaced perimeter vertices and no
/// foreign-instance check, so geometry strictly inside the rim is invisible
/// to it.
pub fn evaluate_seal_8vertex(
    scene: &SceneIndex,
    cup: &CupModel,
    cand: &SuctionCandidate,
) -> SealResult {
    seal_impl(scene, cup, cand, SealModel::Perimeter8, false)
}

#[derive(Clone, Copy, PartialEq)]
enum SealModel {
    Full,
    Perimeter8,
}

fn seal_impl(
    scene: &SceneIndex,
    cup: &CupModel,
    cand: &SuctionCandidate,
    model: SealModel,
    keep_diagnostics: bool,
) -> SealResult {
    let pose = cand.cup_pose();
    let rays = match model {
        SealModel::Full => cup.cup_rays(&pose),
        SealModel::Perimeter8 => cup.perimeter_rays(&pose),
    };
    // Beyond twice the rest height the cup cannot reach the surface.
    let max_dist = 2.0 * cup.rest_height;
    let total = rays.origins.len();
    let mut hit_count = 0usize;
    let mut foreign = 0usize;
    let mut min_d = f64::INFINITY;
    let mut max_d = f64::NEG_INFINITY;
    let mut max_def = 0.0f64;
    let mut diag = keep_diagnostics.then(|| Vec::with_capacity(total));
    for origin in &rays.origins {
        let hit = scene.ray_cast(origin, &rays.direction, max_dist);
        if let Some(h) = hit {
            hit_count += 1;
            if h.instance_id != cand.instance_id {
                foreign += 1;
            }
            min_d = min_d.min(h.distance);
            max_d = max_d.max(h.distance);
            max_def = max_def.max((h.distance - cup.rest_height).abs());
            if let Some(d) = &mut diag {
                d.push(Some((h.distance, h.instance_id)));
            }
        } else if let Some(d) = &mut diag {
            d.push(None);
        }
    }
    let spread = if hit_count > 0 { max_d - min_d } else { 0.0 };
    let complete = hit_count == total;
    let tight = spread <= cup.spread_limit();
    let passed = match model {
        SealModel::Full => complete && tight && foreign == 0,
        SealModel::Perimeter8 => complete && tight,
    };
    SealResult {
        passed,
        hit_count,
        rays_cast: total,
        max_deformation: if hit_count > 0 { max_def } else { 0.0 },
        spread,
        foreign_hits: foreign,
        diagnostics: diag,
    }
}

/// Sweeps the cup's bounding cylinder (cup radius + skin, height =
/// rest_height) backward along the approach axis from the contact point by
/// `retreat`. Rays sample the corridor cross-section; any hit on an instance
/// other than the target inside the corridor blocks the approach. Hits on
/// the target itself are allowed.
pub fn evaluate_collision(
    scene: &SceneIndex,
    cup: &CupModel,
    cand: &SuctionCandidate,
    params: &CollisionParams,
) -> CollisionResult {
    let pose = cand.cup_pose();
    let back = UnitVec3::new_normalize(-pose.rotation.column(0).into_owned());
    let v2 = pose.rotation.column(1).into_owned();
    let v3 = pose.rotation.column(2).into_owned();
    let contact = cand.contact_point();
    let free = cup.rest_height + params.retreat;
    let outer = cup.radius + params.skin;

    let mut origins = Vec::with_capacity(1 + params.radial_rings * params.angular_steps);
    origins.push(contact);
    for ring in 1..=params.radial_rings {
        let r = outer * ring as f64 / params.radial_rings as f64;
        for j in 0..params.angular_steps {
            let theta = std::f64::consts::TAU * j as f64 / params.angular_steps as f64;
            origins.push(contact + v2 * (r * theta.cos()) + v3 * (r * theta.sin()));
        }
    }

    let mut blocking: Option<(f64, u32)> = None;
    for origin in &origins {
        // A corridor origin buried below the ground plane: retreat rays run
        // parallel to the plane and would never report it.
        if scene.has_ground() && origin.z < -1e-9 && back.z.abs() < 1e-12 {
            blocking = Some((0.0, 0));
            break;
        }
        consider(
            scene.ray_cast_all(origin, &back, free),
            cand.instance_id,
            &mut blocking,
        );
    }
    // Radial rays at stations along the corridor axis.
    for k in 0..=params.axial_steps {
        let station = contact + back.into_inner() * (free * k as f64 / params.axial_steps as f64);
        for j in 0..params.angular_steps {
            let theta = std::f64::consts::TAU * j as f64 / params.angular_steps as f64;
            let u = UnitVec3::new_normalize(v2 * theta.cos() + v3 * theta.sin());
            consider(
                scene.ray_cast_all(&station, &u, outer),
                cand.instance_id,
                &mut blocking,
            );
        }
    }
    match blocking {
        Some((d, id)) => CollisionResult {
            passed: false,
            blocking_instance: Some(id),
            clearance: d,
        },
        None => CollisionResult {
            passed: true,
            blocking_instance: None,
            clearance: free,
        },
    }
}

/// Keeps the nearest foreign hit; hits on `exclude` never block.
fn consider(hits: Vec<crate::geometry::RayHit>, exclude: u32, blocking: &mut Option<(f64, u32)>) {
    for hit in hits {
        if hit.instance_id == exclude {
            continue;
        }
        match blocking {
            Some((d, _)) if *d <= hit.distance => {}
            _ => *blocking = Some((hit.distance, hit.instance_id)),
        }
        break; // hits are sorted; the first foreign one is the nearest
    }
}
