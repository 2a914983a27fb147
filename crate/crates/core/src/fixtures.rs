//! Procedural test geometry: pads with analytically known seal verdicts,
//! box-stack scenes for pile-load tests, parametric primitive clouds, and a
//! small demo scene with synthetic depth rendering.
//!
//! Pads are generated, never shipped as assets, so the analytic verdicts and
//! the geometry cannot drift apart. Interior features (grooves, holes) are
//! rotated 22.5 degrees so they thread between the 8 perimeter vertices of
//! the coarse seal model.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cup::CupModel;
use crate::geometry::{
    sample_mesh_surface, CameraIntrinsics, CleanStats, DepthImage, Point3, PointCloud, Pose6D,
    SceneIndex, SceneModel, SceneObject, TriangleMesh, UnitVec3, Vec3,
};
use crate::{Error, Result};

/// Feature orientation that avoids the coarse model's perimeter vertices
/// (which sit at multiples of 45 degrees).
const FEATURE_ANGLE: f64 = 22.5;

/// Pad taxonomy. All lengths in meters, angles in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PadKind {
    Flat,
    Tilt { angle: f64 },
    Groove { width: f64, depth: f64 },
    Hole { radius: f64 },
    Rough { amplitude: f64, wavelength: f64 },
    Step { height: f64 },
}

/// A test pad: one feature on a square footprint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PadSpec {
    pub kind: PadKind,
    /// Square side length, m.
    pub footprint: f64,
}

impl PadSpec {
    pub fn validate(&self, cup: &CupModel) -> Result<()> {
        if self.footprint < 4.0 * cup.radius {
            return Err(Error::invalid(format!(
                "footprint {} below 4 cup radii",
                self.footprint
            )));
        }
        let positive = |v: f64, what: &str| {
            if v > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(format!("{what} must be positive")))
            }
        };
        match self.kind {
            PadKind::Flat => Ok(()),
            PadKind::Tilt { angle } => {
                positive(angle, "tilt angle")?;
                if angle >= 45f64.to_radians() {
                    return Err(Error::invalid("tilt angle must stay below 45 degrees"));
                }
                Ok(())
            }
            PadKind::Groove { width, depth } => {
                positive(width, "groove width")?;
                positive(depth, "groove depth")?;
                // The analytic verdict assumes rays straddle the groove and
                // can reach its floor.
                if width >= 2.0 * cup.radius {
                    return Err(Error::invalid("groove must be narrower than the cup"));
                }
                if depth >= cup.rest_height {
                    return Err(Error::invalid("groove floor must stay within ray reach"));
                }
                Ok(())
            }
            PadKind::Hole { radius } => positive(radius, "hole radius"),
            PadKind::Rough {
                amplitude,
                wavelength,
            } => {
                positive(amplitude, "roughness amplitude")?;
                positive(wavelength, "roughness wavelength")?;
                if wavelength > 2.0 * cup.radius {
                    return Err(Error::invalid(
                        "wavelength above the cup diameter breaks the spread bound",
                    ));
                }
                if amplitude >= 0.5 * cup.rest_height {
                    return Err(Error::invalid("roughness amplitude out of ray reach"));
                }
                Ok(())
            }
            PadKind::Step { height } => {
                positive(height, "step height")?;
                if height >= cup.rest_height {
                    return Err(Error::invalid("step must stay within ray reach"));
                }
                Ok(())
            }
        }
    }

    /// Analytic verdict of the full seal model for a centered vertical
    /// candidate, with the 10% threshold `tau` and rest height `h`:
    ///
    /// - flat: passes.
    /// - tilt(a): spread = 2R tan a; passes iff 2R tan a <= tau*h.
    /// - groove(w, d): straddling rays see spread d; passes iff d <= tau*h.
    /// - hole(r): rays inside the hole miss; passes iff r < innermost ring
    ///   radius R/num_rings.
    /// - rough(A, L): spread = 2A (the disk spans a full period); passes iff
    ///   2A <= tau*h.
    /// - step(s): spread = s; passes iff s <= tau*h.
    pub fn expected_seal(&self, cup: &CupModel) -> bool {
        let limit = cup.spread_limit();
        match self.kind {
            PadKind::Flat => true,
            PadKind::Tilt { angle } => 2.0 * cup.radius * angle.tan() <= limit,
            PadKind::Groove { depth, .. } => depth <= limit,
            PadKind::Hole { radius } => radius < cup.radius / cup.num_rings as f64,
            PadKind::Rough { amplitude, .. } => 2.0 * amplitude <= limit,
            PadKind::Step { height } => height <= limit,
        }
    }

    /// Builds the pad mesh with its top surface through the origin, so a
    /// centered vertical candidate contacts at (0,0,0).
    pub fn make_pad(&self) -> Result<TriangleMesh> {
        let f = self.footprint / 2.0;
        if f <= 0.0 {
            return Err(Error::invalid("footprint must be positive"));
        }
        let (mesh, _) = match self.kind {
            PadKind::Flat => square_patch(f, 0.0),
            PadKind::Tilt { angle } => {
                let (flat, stats) = square_patch(f, 0.0);
                let tilted: Vec<Point3> = flat
                    .vertices
                    .iter()
                    .map(|p| Point3::new(p.x, p.y, p.x * angle.tan()))
                    .collect();
                (
                    TriangleMesh::new(tilted, flat.triangles)?.0,
                    stats,
                )
            }
            PadKind::Groove { width, depth } => groove_mesh(f, width, depth)?,
            PadKind::Hole { radius } => hole_mesh(f, radius)?,
            PadKind::Rough {
                amplitude,
                wavelength,
            } => rough_mesh(f, amplitude, wavelength)?,
            PadKind::Step { height } => step_mesh(f, height)?,
        };
        Ok(mesh)
    }

    /// Pad wrapped as a single-object scene (instance 1, no ground plane, so
    /// rays through holes escape instead of hitting z = 0).
    pub fn make_scene(&self) -> Result<SceneModel> {
        SceneModel::new(
            vec![SceneObject {
                instance_id: 1,
                mesh: self.make_pad()?,
                pose: Pose6D::identity(),
                mass_kg: 1.0,
                friction: 0.5,
            }],
            false,
        )
    }
}

/// A centered vertical candidate for pad scenes: contact at the origin,
/// outward normal +z.
pub fn centered_vertical_candidate(instance_id: u32) -> crate::sampling::SuctionCandidate {
    let r = nalgebra::Matrix3::new(0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0);
    crate::sampling::SuctionCandidate {
        pose: Pose6D::new(r, Vec3::zeros()).unwrap(),
        instance_id,
        contact_index: 0,
    }
}

fn square_patch(half: f64, z: f64) -> (TriangleMesh, CleanStats) {
    TriangleMesh::new(
        vec![
            Point3::new(-half, -half, z),
            Point3::new(half, -half, z),
            Point3::new(half, half, z),
            Point3::new(-half, half, z),
        ],
        vec![[0, 1, 2], [0, 2, 3]],
    )
    .unwrap()
}

fn rot_feature(p: Point3) -> Point3 {
    let a = FEATURE_ANGLE.to_radians();
    Point3::new(p.x * a.cos() - p.y * a.sin(), p.x * a.sin() + p.y * a.cos(), p.z)
}

fn push_quad(verts: &mut Vec<Point3>, tris: &mut Vec<[u32; 3]>, corners: [Point3; 4]) {
    let base = verts.len() as u32;
    verts.extend(corners.iter().map(|&p| rot_feature(p)));
    tris.push([base, base + 1, base + 2]);
    tris.push([base, base + 2, base + 3]);
}

fn groove_mesh(half: f64, width: f64, depth: f64) -> Result<(TriangleMesh, CleanStats)> {
    let w = width / 2.0;
    let mut verts = Vec::new();
    let mut tris = Vec::new();
    // Top shoulders.
    push_quad(
        &mut verts,
        &mut tris,
        [
            Point3::new(-half, -half, 0.0),
            Point3::new(-w, -half, 0.0),
            Point3::new(-w, half, 0.0),
            Point3::new(-half, half, 0.0),
        ],
    );
    push_quad(
        &mut verts,
        &mut tris,
        [
            Point3::new(w, -half, 0.0),
            Point3::new(half, -half, 0.0),
            Point3::new(half, half, 0.0),
            Point3::new(w, half, 0.0),
        ],
    );
    // Floor.
    push_quad(
        &mut verts,
        &mut tris,
        [
            Point3::new(-w, -half, -depth),
            Point3::new(w, -half, -depth),
            Point3::new(w, half, -depth),
            Point3::new(-w, half, -depth),
        ],
    );
    // Walls.
    for x in [-w, w] {
        push_quad(
            &mut verts,
            &mut tris,
            [
                Point3::new(x, -half, -depth),
                Point3::new(x, half, -depth),
                Point3::new(x, half, 0.0),
                Point3::new(x, -half, 0.0),
            ],
        );
    }
    TriangleMesh::new(verts, tris)
}

fn hole_mesh(half: f64, radius: f64) -> Result<(TriangleMesh, CleanStats)> {
    if radius >= half {
        return Err(Error::invalid("hole radius exceeds the footprint"));
    }
    const SEGS: usize = 64;
    let mut verts = Vec::with_capacity(2 * SEGS);
    // Inner ring on the hole circle, outer ring on the square boundary at
    // matching azimuths.
    for j in 0..SEGS {
        let a = std::f64::consts::TAU * (j as f64 + 0.5) / SEGS as f64;
        verts.push(Point3::new(radius * a.cos(), radius * a.sin(), 0.0));
    }
    for j in 0..SEGS {
        let a = std::f64::consts::TAU * (j as f64 + 0.5) / SEGS as f64;
        let scale = half / a.cos().abs().max(a.sin().abs());
        verts.push(Point3::new(scale * a.cos(), scale * a.sin(), 0.0));
    }
    let mut tris = Vec::with_capacity(2 * SEGS);
    for j in 0..SEGS {
        let jn = (j + 1) % SEGS;
        let (ci, cn) = (j as u32, jn as u32);
        let (si, sn) = ((SEGS + j) as u32, (SEGS + jn) as u32);
        tris.push([ci, si, sn]);
        tris.push([ci, sn, cn]);
    }
    TriangleMesh::new(verts, tris)
}

fn rough_mesh(half: f64, amplitude: f64, wavelength: f64) -> Result<(TriangleMesh, CleanStats)> {
    // Grid step well under the wavelength keeps the interpolated spread
    // close to the analytic 2A.
    let step = wavelength / 16.0;
    let n = ((2.0 * half) / step).ceil() as usize + 1;
    let mut verts = Vec::with_capacity(n * n);
    for iy in 0..n {
        for ix in 0..n {
            let x = -half + 2.0 * half * ix as f64 / (n - 1) as f64;
            let y = -half + 2.0 * half * iy as f64 / (n - 1) as f64;
            let z = amplitude
                * (std::f64::consts::TAU * x / wavelength).sin()
                * (std::f64::consts::TAU * y / wavelength).sin();
            verts.push(Point3::new(x, y, z));
        }
    }
    let mut tris = Vec::with_capacity(2 * (n - 1) * (n - 1));
    for iy in 0..n - 1 {
        for ix in 0..n - 1 {
            let a = (iy * n + ix) as u32;
            let b = a + 1;
            let c = a + n as u32;
            let d = c + 1;
            tris.push([a, b, d]);
            tris.push([a, d, c]);
        }
    }
    TriangleMesh::new(verts, tris)
}

fn step_mesh(half: f64, height: f64) -> Result<(TriangleMesh, CleanStats)> {
    let mut verts = Vec::new();
    let mut tris = Vec::new();
    // Upper shelf (x < 0) at z = 0, lower shelf at z = -height.
    push_quad(
        &mut verts,
        &mut tris,
        [
            Point3::new(-half, -half, 0.0),
            Point3::new(0.0, -half, 0.0),
            Point3::new(0.0, half, 0.0),
            Point3::new(-half, half, 0.0),
        ],
    );
    push_quad(
        &mut verts,
        &mut tris,
        [
            Point3::new(0.0, -half, -height),
            Point3::new(half, -half, -height),
            Point3::new(half, half, -height),
            Point3::new(0.0, half, -height),
        ],
    );
    push_quad(
        &mut verts,
        &mut tris,
        [
            Point3::new(0.0, -half, -height),
            Point3::new(0.0, half, -height),
            Point3::new(0.0, half, 0.0),
            Point3::new(0.0, -half, 0.0),
        ],
    );
    TriangleMesh::new(verts, tris)
}

/// One pad of the procedural test board.
#[derive(Debug, Clone)]
pub struct BoardPad {
    pub name: &'static str,
    pub spec: PadSpec,
    pub expected_seal: bool,
    /// Pads where the 8-perimeter-vertex model is expected to report a false
    /// positive (interior features invisible to the rim).
    pub coarse_false_positive: bool,
}

/// The digital test board: pads straddling every analytic pass/fail
/// boundary, including the interior-groove and interior-hole pads the
/// perimeter-only model gets wrong.
pub fn standard_board(cup: &CupModel) -> Vec<BoardPad> {
    let footprint = (4.0 * cup.radius).max(0.06);
    let pad = |kind| PadSpec { kind, footprint };
    let deg = |d: f64| d.to_radians();
    vec![
        BoardPad {
            name: "flat",
            spec: pad(PadKind::Flat),
            expected_seal: true,
            coarse_false_positive: false,
        },
        BoardPad {
            name: "tilt_2deg",
            spec: pad(PadKind::Tilt { angle: deg(2.0) }),
            expected_seal: true,
            coarse_false_positive: false,
        },
        BoardPad {
            name: "tilt_3p5deg",
            spec: pad(PadKind::Tilt { angle: deg(3.5) }),
            expected_seal: true,
            coarse_false_positive: false,
        },
        BoardPad {
            name: "tilt_5deg",
            spec: pad(PadKind::Tilt { angle: deg(5.0) }),
            expected_seal: false,
            coarse_false_positive: false,
        },
        BoardPad {
            name: "tilt_10deg",
            spec: pad(PadKind::Tilt { angle: deg(10.0) }),
            expected_seal: false,
            coarse_false_positive: false,
        },
        BoardPad {
            name: "groove_shallow",
            spec: pad(PadKind::Groove {
                width: 0.006,
                depth: 0.001,
            }),
            expected_seal: true,
            coarse_false_positive: false,
        },
        BoardPad {
            name: "groove_deep",
            spec: pad(PadKind::Groove {
                width: 0.006,
                depth: 0.005,
            }),
            expected_seal: false,
            coarse_false_positive: true,
        },
        BoardPad {
            name: "hole_tiny",
            spec: pad(PadKind::Hole { radius: 0.0008 }),
            expected_seal: true,
            coarse_false_positive: false,
        },
        BoardPad {
            name: "hole_mid",
            spec: pad(PadKind::Hole { radius: 0.0045 }),
            expected_seal: false,
            coarse_false_positive: true,
        },
        BoardPad {
            name: "hole_wide",
            spec: pad(PadKind::Hole {
                radius: cup.radius + 0.005,
            }),
            expected_seal: false,
            coarse_false_positive: false,
        },
        BoardPad {
            name: "rough_fine",
            spec: pad(PadKind::Rough {
                amplitude: 0.0005,
                wavelength: 0.010,
            }),
            expected_seal: true,
            coarse_false_positive: false,
        },
        BoardPad {
            name: "rough_coarse",
            spec: pad(PadKind::Rough {
                amplitude: 0.002,
                wavelength: 0.010,
            }),
            expected_seal: false,
            coarse_false_positive: false,
        },
        BoardPad {
            name: "step_low",
            spec: pad(PadKind::Step { height: 0.001 }),
            expected_seal: true,
            coarse_false_positive: false,
        },
        BoardPad {
            name: "step_high",
            spec: pad(PadKind::Step { height: 0.005 }),
            expected_seal: false,
            coarse_false_positive: false,
        },
    ]
}

/// Closed axis-aligned box mesh centered at the origin.
pub fn box_mesh(half_extents: Vec3) -> (TriangleMesh, CleanStats) {
    let h = half_extents;
    let v = [
        Point3::new(-h.x, -h.y, -h.z),
        Point3::new(h.x, -h.y, -h.z),
        Point3::new(h.x, h.y, -h.z),
        Point3::new(-h.x, h.y, -h.z),
        Point3::new(-h.x, -h.y, h.z),
        Point3::new(h.x, -h.y, h.z),
        Point3::new(h.x, h.y, h.z),
        Point3::new(-h.x, h.y, h.z),
    ];
    let tris = vec![
        [0, 2, 1],
        [0, 3, 2], // bottom (-z)
        [4, 5, 6],
        [4, 6, 7], // top (+z)
        [0, 1, 5],
        [0, 5, 4], // -y
        [2, 3, 7],
        [2, 7, 6], // +y
        [0, 4, 7],
        [0, 7, 3], // -x
        [1, 2, 6],
        [1, 6, 5], // +x
    ];
    TriangleMesh::new(v.to_vec(), tris).unwrap()
}

/// Closed upright cylinder mesh centered at the origin.
pub fn cylinder_mesh(radius: f64, height: f64, segments: usize) -> (TriangleMesh, CleanStats) {
    let hz = height / 2.0;
    let mut verts = Vec::with_capacity(2 * segments + 2);
    for &z in &[-hz, hz] {
        for j in 0..segments {
            let a = std::f64::consts::TAU * j as f64 / segments as f64;
            verts.push(Point3::new(radius * a.cos(), radius * a.sin(), z));
        }
    }
    let bottom_center = verts.len() as u32;
    verts.push(Point3::new(0.0, 0.0, -hz));
    let top_center = verts.len() as u32;
    verts.push(Point3::new(0.0, 0.0, hz));
    let mut tris = Vec::new();
    for j in 0..segments {
        let jn = (j + 1) % segments;
        let (b0, b1) = (j as u32, jn as u32);
        let (t0, t1) = ((segments + j) as u32, (segments + jn) as u32);
        tris.push([b0, t0, t1]);
        tris.push([b0, t1, b1]);
        tris.push([bottom_center, b1, b0]);
        tris.push([top_center, t0, t1]);
    }
    TriangleMesh::new(verts, tris).unwrap()
}

/// One box in a vertical stack.
#[derive(Debug, Clone, Copy)]
pub struct BoxSpec {
    pub half_extents: Vec3,
    /// Horizontal center; boxes rest exactly on the one below.
    pub center_xy: (f64, f64),
    pub mass_kg: f64,
}

/// Stacks boxes bottom-up on the ground plane with exact poses and masses;
/// instance ids are 1-based in stack order. Each box must overlap the one
/// below in footprint, otherwise it would float.
pub fn make_stack_scene(specs: &[BoxSpec]) -> Result<SceneModel> {
    if specs.is_empty() {
        return Err(Error::invalid("stack needs at least one box"));
    }
    let mut objects = Vec::with_capacity(specs.len());
    let mut z = 0.0;
    for (i, spec) in specs.iter().enumerate() {
        let h = spec.half_extents;
        if h.x <= 0.0 || h.y <= 0.0 || h.z <= 0.0 {
            return Err(Error::invalid("box extents must be positive"));
        }
        if i > 0 {
            let below = &specs[i - 1];
            let dx = (spec.center_xy.0 - below.center_xy.0).abs();
            let dy = (spec.center_xy.1 - below.center_xy.1).abs();
            if dx >= h.x + below.half_extents.x || dy >= h.y + below.half_extents.y {
                return Err(Error::invalid(format!(
                    "box {} does not rest on the box below",
                    i + 1
                )));
            }
        }
        let (mesh, _) = box_mesh(h);
        objects.push(SceneObject {
            instance_id: (i + 1) as u32,
            mesh,
            pose: Pose6D {
                rotation: nalgebra::Matrix3::identity(),
                translation: Vec3::new(spec.center_xy.0, spec.center_xy.1, z + h.z),
            },
            mass_kg: spec.mass_kg,
            friction: 0.5,
        });
        z += 2.0 * h.z;
    }
    SceneModel::new(objects, true)
}

/// Area-uniform samples of a sphere with exact radial normals.
pub fn sample_sphere_cloud(radius: f64, n: usize, seed: u64) -> PointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n);
    let mut normals = Vec::with_capacity(n);
    for _ in 0..n {
        let z: f64 = rng.random_range(-1.0..1.0);
        let a: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let r = (1.0 - z * z).sqrt();
        let dir = Vec3::new(r * a.cos(), r * a.sin(), z);
        points.push(Point3::from(dir * radius));
        normals.push(UnitVec3::new_normalize(dir));
    }
    PointCloud::new(points, Some(normals), None).unwrap()
}

/// Uniform samples of an upright cylinder's lateral surface (axis = z,
/// centered at the origin) with exact radial normals.
pub fn sample_cylinder_cloud(radius: f64, height: f64, n: usize, seed: u64) -> PointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n);
    let mut normals = Vec::with_capacity(n);
    for _ in 0..n {
        let a: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let z: f64 = rng.random_range(-height / 2.0..height / 2.0);
        let dir = Vec3::new(a.cos(), a.sin(), 0.0);
        points.push(Point3::new(radius * a.cos(), radius * a.sin(), z));
        normals.push(UnitVec3::new_normalize(dir));
    }
    PointCloud::new(points, Some(normals), None).unwrap()
}

/// Uniform samples of the z = 0 plane patch with +z normals.
pub fn sample_plane_cloud(half: f64, n: usize, seed: u64) -> PointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        let x: f64 = rng.random_range(-half..half);
        let y: f64 = rng.random_range(-half..half);
        points.push(Point3::new(x, y, 0.0));
    }
    let normals = vec![UnitVec3::new_normalize(Vec3::z()); n];
    PointCloud::new(points, Some(normals), None).unwrap()
}

/// Small cluttered demo scene: a stacked pair of boxes (the small one on a
/// corner, leaving part of the big top face graspable) and a wide cylinder
/// on the ground plane.
pub fn make_demo_scene() -> SceneModel {
    let (big, _) = box_mesh(Vec3::new(0.04, 0.03, 0.02));
    let (small, _) = box_mesh(Vec3::new(0.02, 0.02, 0.015));
    let (cyl, _) = cylinder_mesh(0.020, 0.05, 48);
    SceneModel::new(
        vec![
            SceneObject {
                instance_id: 1,
                mesh: big,
                pose: Pose6D {
                    rotation: nalgebra::Matrix3::identity(),
                    translation: Vec3::new(-0.04, 0.0, 0.02),
                },
                mass_kg: 0.35,
                friction: 0.5,
            },
            SceneObject {
                instance_id: 2,
                mesh: small,
                pose: Pose6D {
                    rotation: nalgebra::Matrix3::identity(),
                    translation: Vec3::new(-0.06, 0.015, 0.055),
                },
                mass_kg: 0.15,
                friction: 0.6,
            },
            SceneObject {
                instance_id: 3,
                mesh: cyl,
                pose: Pose6D {
                    rotation: nalgebra::Matrix3::identity(),
                    translation: Vec3::new(0.06, 0.02, 0.025),
                },
                mass_kg: 0.20,
                friction: 0.4,
            },
        ],
        true,
    )
    .unwrap()
}

/// Labeled surface cloud of a whole scene: `per_object` area-uniform samples
/// from each object's world mesh with analytic face normals, plus an equal
/// batch of ground-plane points (label 0) under and around the objects when
/// the scene has a ground plane.
pub fn scene_surface_cloud(scene: &SceneModel, per_object: usize, seed: u64) -> Result<PointCloud> {
    let mut points = Vec::new();
    let mut normals = Vec::new();
    let mut labels = Vec::new();
    let mut lo = Vec3::repeat(f64::INFINITY);
    let mut hi = Vec3::repeat(f64::NEG_INFINITY);
    for obj in &scene.objects {
        let world = obj.mesh.transformed(&obj.pose);
        for v in &world.vertices {
            lo = lo.inf(&v.coords);
            hi = hi.sup(&v.coords);
        }
        let sampled = sample_mesh_surface(&world, per_object, seed ^ u64::from(obj.instance_id))?;
        let ns = sampled.normals()?.to_vec();
        labels.extend(std::iter::repeat_n(obj.instance_id, sampled.len()));
        points.extend(sampled.points);
        normals.extend(ns);
    }
    if scene.ground_plane && !scene.objects.is_empty() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6eb6);
        let margin = 0.08;
        let mut added = 0;
        while added < per_object {
            let x = rng.random_range(lo.x - margin..hi.x + margin);
            let y = rng.random_range(lo.y - margin..hi.y + margin);
            points.push(Point3::new(x, y, 0.0));
            normals.push(UnitVec3::new_normalize(Vec3::z()));
            labels.push(0);
            added += 1;
        }
    }
    PointCloud::new(points, Some(normals), Some(labels))
}

/// Camera-to-world pose looking from `eye` toward `target` (camera z
/// forward, y down).
pub fn look_at(eye: Point3, target: Point3) -> Pose6D {
    let forward = UnitVec3::new_normalize(target - eye).into_inner();
    let up = if forward.z.abs() > 0.99 {
        Vec3::y()
    } else {
        Vec3::z()
    };
    let x = UnitVec3::new_normalize(forward.cross(&up)).into_inner();
    let y = forward.cross(&x);
    let mut r = nalgebra::Matrix3::zeros();
    r.set_column(0, &x);
    r.set_column(1, &y);
    r.set_column(2, &forward);
    Pose6D {
        rotation: r,
        translation: eye.coords,
    }
}

/// Renders a depth + instance-label image by casting one ray per pixel.
pub fn render_depth(
    scene: &SceneIndex,
    intr: &CameraIntrinsics,
    extrinsic: &Pose6D,
    max_range: f64,
) -> (DepthImage, Vec<u32>) {
    let origin = Point3::from(extrinsic.translation);
    let mut depth = vec![0.0f64; intr.width * intr.height];
    let mut labels = vec![0u32; intr.width * intr.height];
    for v in 0..intr.height {
        for u in 0..intr.width {
            let cam_dir = Vec3::new(
                (u as f64 - intr.cx) / intr.fx,
                (v as f64 - intr.cy) / intr.fy,
                1.0,
            );
            let scale = cam_dir.norm();
            let dir = UnitVec3::new_normalize(extrinsic.rotation * cam_dir);
            if let Some(hit) = scene.ray_cast(&origin, &dir, max_range) {
                // Depth is the camera-frame z, not the ray length.
                depth[v * intr.width + u] = hit.distance / scale;
                labels[v * intr.width + u] = hit.instance_id;
            }
        }
    }
    (
        DepthImage {
            width: intr.width,
            height: intr.height,
            data: depth,
        },
        labels,
    )
}
