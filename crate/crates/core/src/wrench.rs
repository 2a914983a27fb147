//! Quasi-static wrench gate: pile-load discovery over a support graph, then
//! payload-force, gravity-torque and bend-angle checks against the cup
//! limits. A candidate lifting an object must also lift everything resting
//! on it, with mass split equally among multiple supporters.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::cup::CupModel;
use crate::geometry::{
    mesh_volume_centroid, sample_mesh_surface, SceneIndex, SceneModel, UnitVec3, Vec3,
};
use crate::sampling::SuctionCandidate;
use crate::seal::{evaluate_collision, evaluate_seal, CollisionParams, CollisionResult, SealResult};
use crate::{Error, Result, GRAVITY};

/// Why a wrench evaluation failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WrenchFailure {
    None,
    Force,
    Torque,
    Bend,
}

/// Outcome of the quasi-static dynamics surrogate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WrenchResult {
    pub passed: bool,
    /// Weight of the target plus its pile share, N.
    pub payload_force: f64,
    /// Moment of that weight about the contact point, N*m.
    pub gravity_torque: f64,
    /// Angle between the approach axis and vertical, rad.
    pub bend_angle: f64,
    /// Target mass plus transitive pile share, kg.
    pub supported_mass: f64,
    pub failure_reason: WrenchFailure,
}

/// Directed support relations: an edge a -> b means b rests on a. Loads are
/// the transitive pile masses with equal splits among supporters.
#[derive(Debug, Clone)]
pub struct SupportGraph {
    /// supporter -> supported objects
    pub edges: BTreeMap<u32, Vec<u32>>,
    /// instance -> number of distinct supporters
    pub supporter_count: BTreeMap<u32, usize>,
    /// instance -> pile load, kg
    pub loads: BTreeMap<u32, f64>,
}

impl SupportGraph {
    pub fn load(&self, instance_id: u32) -> Result<f64> {
        self.loads
            .get(&instance_id)
            .copied()
            .ok_or(Error::UnknownInstance(instance_id))
    }

    pub fn supports(&self, supporter: u32, supported: u32) -> bool {
        self.edges
            .get(&supporter)
            .is_some_and(|v| v.contains(&supported))
    }
}

/// Contact-witness tolerance: a downward ray from an object's lower surface
/// must land on its supporter within this distance.
const CONTACT_TOLERANCE: f64 = 0.003;
/// Surface samples drawn per object to find support witnesses.
const WITNESS_SAMPLES: usize = 400;

/// Finds who rests on whom by casting downward rays from each object's
/// lower-facing surface samples, then propagates pile loads:
/// `load(x) = mass(x) + sum over objects b directly on x of
/// load(b) / supporter_count(b)`. Contact cycles (interlocking geometry)
/// are broken at the weakest witness count.
pub fn build_support_graph(scene: &SceneModel) -> Result<SupportGraph> {
    if scene.objects.is_empty() {
        return Err(Error::invalid("support graph needs a non-empty scene"));
    }
    let index = SceneIndex::build(scene);
    let down = UnitVec3::new_normalize(-Vec3::z());

    // witnesses[(a, b)] = contact witnesses for "b rests on a".
    let mut witnesses: BTreeMap<(u32, u32), usize> = BTreeMap::new();
    for obj in &scene.objects {
        let world_mesh = obj.mesh.transformed(&obj.pose);
        let samples = sample_mesh_surface(&world_mesh, WITNESS_SAMPLES, u64::from(obj.instance_id))?;
        let normals = samples.normals()?;
        for (p, n) in samples.points.iter().zip(normals) {
            // Only the lower-facing surface can rest on something.
            if n.z > -0.1 {
                continue;
            }
            for hit in index.ray_cast_all(p, &down, CONTACT_TOLERANCE) {
                if hit.instance_id == obj.instance_id || hit.instance_id == 0 {
                    continue;
                }
                *witnesses
                    .entry((hit.instance_id, obj.instance_id))
                    .or_insert(0) += 1;
                break;
            }
        }
    }

    let mut edges: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    let mut supporter_count: BTreeMap<u32, usize> = BTreeMap::new();
    for obj in &scene.objects {
        edges.entry(obj.instance_id).or_default();
        supporter_count.entry(obj.instance_id).or_insert(0);
    }
    let mut ranked: Vec<((u32, u32), usize)> = witnesses.into_iter().collect();
    // Strongest contacts first so cycle-breaking drops the weakest evidence.
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    for ((supporter, supported), _count) in ranked {
        if creates_cycle(&edges, supporter, supported) {
            continue;
        }
        edges.get_mut(&supporter).unwrap().push(supported);
        *supporter_count.get_mut(&supported).unwrap() += 1;
    }
    for list in edges.values_mut() {
        list.sort_unstable();
    }

    // Pile loads by memoized descent over the DAG.
    let mut loads: BTreeMap<u32, f64> = BTreeMap::new();
    let masses: BTreeMap<u32, f64> = scene
        .objects
        .iter()
        .map(|o| (o.instance_id, o.mass_kg))
        .collect();
    fn load_of(
        x: u32,
        edges: &BTreeMap<u32, Vec<u32>>,
        counts: &BTreeMap<u32, usize>,
        masses: &BTreeMap<u32, f64>,
        memo: &mut BTreeMap<u32, f64>,
    ) -> f64 {
        if let Some(&v) = memo.get(&x) {
            return v;
        }
        let mut total = masses[&x];
        for &b in &edges[&x] {
            total += load_of(b, edges, counts, masses, memo) / counts[&b] as f64;
        }
        memo.insert(x, total);
        total
    }
    for obj in &scene.objects {
        load_of(
            obj.instance_id,
            &edges,
            &supporter_count,
            &masses,
            &mut loads,
        );
    }

    Ok(SupportGraph {
        edges,
        supporter_count,
        loads,
    })
}

fn creates_cycle(edges: &BTreeMap<u32, Vec<u32>>, supporter: u32, supported: u32) -> bool {
    // Adding supporter -> supported closes a cycle iff supporter is
    // reachable from supported.
    let mut seen = BTreeSet::new();
    let mut stack = vec![supported];
    while let Some(x) = stack.pop() {
        if x == supporter {
            return true;
        }
        if !seen.insert(x) {
            continue;
        }
        if let Some(next) = edges.get(&x) {
            stack.extend(next.iter().copied());
        }
    }
    false
}

/// Quasi-static lift check at g = 9.80665 m/s^2:
/// payload force m*g against the cup force limit, gravity torque
/// ||(COM - T) x m*g*z|| against the torque limit, and the angle between
/// the approach axis and vertical against the bend limit. COM is the
/// uniform-density centroid of the target mesh; m is the pile load.
pub fn evaluate_wrench(
    scene: &SceneModel,
    graph: &SupportGraph,
    cup: &CupModel,
    cand: &SuctionCandidate,
) -> Result<WrenchResult> {
    let object = scene.object(cand.instance_id)?;
    let mass = graph.load(cand.instance_id)?;
    let payload_force = mass * GRAVITY;

    let com = object.pose.transform_point(&mesh_volume_centroid(&object.mesh));
    let lever = com - cand.contact_point();
    let gravity_torque = lever.cross(&(Vec3::z() * payload_force)).norm();

    // Zero bend = cup hanging straight down, approach axis pointing down.
    let approach = cand.approach_axis();
    let bend_angle = approach.dot(&(-Vec3::z())).clamp(-1.0, 1.0).acos();

    let failure_reason = if payload_force > cup.force_limit {
        WrenchFailure::Force
    } else if gravity_torque > cup.torque_limit {
        WrenchFailure::Torque
    } else if bend_angle > cup.max_bend_angle {
        WrenchFailure::Bend
    } else {
        WrenchFailure::None
    };
    Ok(WrenchResult {
        passed: failure_reason == WrenchFailure::None,
        payload_force,
        gravity_torque,
        bend_angle,
        supported_mass: mass,
        failure_reason,
    })
}

/// Tri-state gate value for evaluation records.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Passed,
    Failed,
    Skipped,
}

impl Gate {
    pub fn bit(self) -> Option<u8> {
        match self {
            Gate::Passed => Some(1),
            Gate::Failed => Some(0),
            Gate::Skipped => None,
        }
    }

    fn from_bool(b: bool) -> Gate {
        if b {
            Gate::Passed
        } else {
            Gate::Failed
        }
    }
}

/// Per-candidate evaluation record: the three gate bits, the product Q, and
/// the sub-result diagnostics that were actually computed.
#[derive(Debug, Clone)]
pub struct EvaluationRecord {
    pub candidate_index: usize,
    pub q_collision: Gate,
    pub q_seal: Gate,
    pub q_dynamics: Gate,
    /// Product of the evaluated gates; 0 as soon as one fails.
    pub q: u8,
    pub collision: Option<CollisionResult>,
    pub seal: Option<SealResult>,
    pub wrench: Option<WrenchResult>,
}

/// Which gates to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GateSelection {
    All,
    CollisionOnly,
    SealOnly,
    /// Collision + seal, skipping the wrench gate.
    NoDynamics,
}

impl std::str::FromStr for GateSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<GateSelection> {
        match s {
            "all" => Ok(GateSelection::All),
            "collision-only" => Ok(GateSelection::CollisionOnly),
            "seal-only" => Ok(GateSelection::SealOnly),
            "no-dynamics" => Ok(GateSelection::NoDynamics),
            other => Err(Error::invalid(format!(
                "unknown gate selection {other:?} (expected all, collision-only, seal-only, no-dynamics)"
            ))),
        }
    }
}

/// Runs collision, then seal, then the wrench surrogate, short-circuiting on
/// the first failed gate; skipped gates are marked as such and
/// Q = Q_collision * Q_seal * Q_dynamics over the computed bits.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_candidate_full(
    scene: &SceneModel,
    index: &SceneIndex,
    graph: &SupportGraph,
    cup: &CupModel,
    params: &CollisionParams,
    cand: &SuctionCandidate,
    candidate_index: usize,
    gates: GateSelection,
) -> Result<EvaluationRecord> {
    let mut record = EvaluationRecord {
        candidate_index,
        q_collision: Gate::Skipped,
        q_seal: Gate::Skipped,
        q_dynamics: Gate::Skipped,
        q: 0,
        collision: None,
        seal: None,
        wrench: None,
    };
    let run_collision = matches!(gates, GateSelection::All | GateSelection::CollisionOnly | GateSelection::NoDynamics);
    let run_seal = matches!(gates, GateSelection::All | GateSelection::SealOnly | GateSelection::NoDynamics);
    let run_wrench = matches!(gates, GateSelection::All);

    let mut alive = true;
    if run_collision {
        let collision = evaluate_collision(index, cup, cand, params);
        record.q_collision = Gate::from_bool(collision.passed);
        alive = collision.passed;
        record.collision = Some(collision);
    }
    if run_seal && alive {
        let seal = evaluate_seal(index, cup, cand);
        record.q_seal = Gate::from_bool(seal.passed);
        alive = seal.passed;
        record.seal = Some(seal);
    }
    if run_wrench && alive {
        let wrench = evaluate_wrench(scene, graph, cup, cand)?;
        record.q_dynamics = Gate::from_bool(wrench.passed);
        alive = wrench.passed;
        record.wrench = Some(wrench);
    }
    record.q = u8::from(alive);
    Ok(record)
}
