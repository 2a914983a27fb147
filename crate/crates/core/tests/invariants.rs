//! Cross-module invariants: determinism, rigid equivariance, monotonicity,
//! and the round-trip identities the pipeline relies on.

use nalgebra::Rotation3;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sgrasp_core::annotation::{annotate_scores, ScoreMap};
use sgrasp_core::cup::CupModel;
use sgrasp_core::fixtures::{
    box_mesh, centered_vertical_candidate, look_at, make_stack_scene, render_depth, BoxSpec,
    PadKind, PadSpec,
};
use sgrasp_core::geometry::{
    camera_center, depth_to_pointcloud, estimate_normals, farthest_point_sampling, merge_views,
    sample_mesh_surface, CameraIntrinsics, Point3, PointCloud, PointIndex, Pose6D, SceneIndex,
    SceneModel, SceneObject, UnitVec3, Vec3,
};
use sgrasp_core::metrics::mse_score;
use sgrasp_core::policy::safety_margin_filter;
use sgrasp_core::sampling::{generate_candidates, SamplerConfig};
use sgrasp_core::seal::{evaluate_collision, evaluate_seal, CollisionParams};
use sgrasp_core::wrench::{
    build_support_graph, evaluate_candidate_full, evaluate_wrench, GateSelection,
};

fn random_points(rng: &mut ChaCha8Rng, n: usize, extent: f64) -> Vec<Point3> {
    (0..n)
        .map(|_| {
            Point3::new(
                rng.random_range(-extent..extent),
                rng.random_range(-extent..extent),
                rng.random_range(-extent..extent),
            )
        })
        .collect()
}

#[test]
fn fps_depends_only_on_inputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let points = random_points(&mut rng, 300, 1.0);
    let cloud = PointCloud::from_points(points.clone());
    let again = PointCloud::from_points(points);
    for (k, seed) in [(1, 0), (10, 5), (50, 299), (300, 0)] {
        assert_eq!(
            farthest_point_sampling(&cloud, k, seed).unwrap(),
            farthest_point_sampling(&again, k, seed).unwrap()
        );
    }
}

#[test]
fn fps_min_pairwise_distance_bounds_covering_radius() {
    // Standard greedy property: after k picks, the min pairwise distance of
    // the selected set is at least the covering radius of the set over the
    // whole cloud.
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for trial in 0..10 {
        let n = rng.random_range(30..=300);
        let cloud = PointCloud::from_points(random_points(&mut rng, n, 0.5));
        let k = rng.random_range(2..=n.min(40));
        let sel = farthest_point_sampling(&cloud, k, rng.random_range(0..n)).unwrap();
        let mut min_pair = f64::INFINITY;
        for i in 0..sel.len() {
            for j in i + 1..sel.len() {
                min_pair =
                    min_pair.min((cloud.points[sel[i]] - cloud.points[sel[j]]).norm());
            }
        }
        let covering = (0..n)
            .map(|i| {
                sel.iter()
                    .map(|&s| (cloud.points[i] - cloud.points[s]).norm())
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(
            min_pair >= covering - 1e-12,
            "trial {trial}: min pairwise {min_pair} < covering {covering}"
        );
    }
}

#[test]
fn fps_covers_better_than_random_sampling() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let cloud = PointCloud::from_points(random_points(&mut rng, 500, 0.5));
    let k = 25;
    let covering = |sel: &[usize]| {
        (0..cloud.len())
            .map(|i| {
                sel.iter()
                    .map(|&s| (cloud.points[i] - cloud.points[s]).norm())
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let fps_radius = covering(&farthest_point_sampling(&cloud, k, 0).unwrap());
    for trial in 0..20 {
        let mut pick: Vec<usize> = (0..cloud.len()).collect();
        // Seeded Fisher-Yates prefix.
        let mut trial_rng = ChaCha8Rng::seed_from_u64(1000 + trial);
        for i in 0..k {
            let j = trial_rng.random_range(i..pick.len());
            pick.swap(i, j);
        }
        let random_radius = covering(&pick[..k]);
        assert!(
            fps_radius <= random_radius,
            "trial {trial}: fps {fps_radius} > random {random_radius}"
        );
    }
}

#[test]
fn ray_hits_lie_on_the_reported_triangle_plane() {
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    let (mesh, _) = box_mesh(Vec3::new(0.05, 0.04, 0.03));
    let scene = SceneModel::new(
        vec![SceneObject {
            instance_id: 1,
            mesh,
            pose: Pose6D {
                rotation: *Rotation3::from_euler_angles(0.3, 0.5, -0.2).matrix(),
                translation: Vec3::new(0.0, 0.0, 0.2),
            },
            mass_kg: 1.0,
            friction: 0.5,
        }],
        true,
    )
    .unwrap();
    let index = SceneIndex::build(&scene);
    let max_dist = 2.0;
    for _ in 0..500 {
        let origin = Point3::new(
            rng.random_range(-0.3..0.3),
            rng.random_range(-0.3..0.3),
            rng.random_range(0.05..0.6),
        );
        let dir = UnitVec3::new_normalize(Vec3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        ));
        if let Some(hit) = index.ray_cast(&origin, &dir, max_dist) {
            assert!(hit.distance >= 0.0 && hit.distance <= max_dist);
            let p = origin + dir.into_inner() * hit.distance;
            match hit.triangle {
                None => assert!(hit.instance_id == 0 && p.z.abs() < 1e-6),
                Some(ti) => {
                    let obj = scene.object(hit.instance_id).unwrap();
                    let [a, b, c] = obj.mesh.triangle_vertices(ti);
                    let (a, b, c) = (
                        obj.pose.transform_point(&a),
                        obj.pose.transform_point(&b),
                        obj.pose.transform_point(&c),
                    );
                    let n = (b - a).cross(&(c - a)).normalize();
                    assert!(
                        n.dot(&(p - a)).abs() < 1e-6,
                        "hit point off plane by {}",
                        n.dot(&(p - a)).abs()
                    );
                }
            }
        }
    }
}

#[test]
fn backprojection_inverts_projection() {
    // Synthesize a depth map by projecting known points, then require
    // depth_to_pointcloud to reproduce them to 1e-9.
    let intr = CameraIntrinsics {
        fx: 311.7,
        fy: 289.3,
        cx: 63.4,
        cy: 59.8,
        width: 128,
        height: 120,
    };
    let extr = Pose6D::new(
        *Rotation3::from_euler_angles(0.2, -0.7, 0.4).matrix(),
        Vec3::new(0.5, -0.3, 0.8),
    )
    .unwrap();
    let mut depth = vec![0.0f64; intr.width * intr.height];
    let mut expected = Vec::new();
    let inv = extr.inverse();
    let mut rng = ChaCha8Rng::seed_from_u64(35);
    for _ in 0..500 {
        let u = rng.random_range(0..intr.width);
        let v = rng.random_range(0..intr.height);
        if depth[v * intr.width + u] > 0.0 {
            continue;
        }
        let z = rng.random_range(0.3..3.0);
        let cam = Point3::new(
            (u as f64 - intr.cx) * z / intr.fx,
            (v as f64 - intr.cy) * z / intr.fy,
            z,
        );
        depth[v * intr.width + u] = z;
        expected.push((u, v, extr.transform_point(&cam)));
    }
    let image = sgrasp_core::geometry::DepthImage::new(intr.width, intr.height, depth).unwrap();
    let cloud = depth_to_pointcloud(&image, &intr, &extr, None).unwrap();
    for p in &cloud.points {
        // Re-project through the inverse and check the pinhole identity.
        let cam = inv.transform_point(p);
        let u = (cam.x * intr.fx / cam.z + intr.cx).round() as usize;
        let v = (cam.y * intr.fy / cam.z + intr.cy).round() as usize;
        let world = expected
            .iter()
            .find(|(eu, ev, _)| *eu == u && *ev == v)
            .map(|(_, _, w)| *w)
            .expect("every output pixel was synthesized");
        assert!((world - p).norm() < 1e-9);
    }
}

#[test]
fn merged_views_cover_the_visible_surface() {
    // A floating box seen from opposite corners: the fused cloud must cover
    // 95% of an area-uniform surface sample within 2 mm.
    let (mesh, _) = box_mesh(Vec3::new(0.03, 0.02, 0.015));
    let scene = SceneModel::new(
        vec![SceneObject {
            instance_id: 1,
            mesh: mesh.clone(),
            pose: Pose6D::identity(),
            mass_kg: 1.0,
            friction: 0.5,
        }],
        false,
    )
    .unwrap();
    let index = SceneIndex::build(&scene);
    let intr = CameraIntrinsics {
        fx: 400.0,
        fy: 400.0,
        cx: 160.0,
        cy: 160.0,
        width: 320,
        height: 320,
    };
    let eyes = [
        Point3::new(0.2, 0.2, 0.2),
        Point3::new(-0.2, -0.2, -0.2),
        Point3::new(0.2, -0.2, 0.05),
    ];
    let mut views = Vec::new();
    for eye in eyes {
        let extr = look_at(eye, Point3::origin());
        let (depth, labels) = render_depth(&index, &intr, &extr, 2.0);
        let cloud = depth_to_pointcloud(&depth, &intr, &extr, Some(&labels)).unwrap();
        let cloud = estimate_normals(&cloud, 12, &camera_center(&extr)).unwrap();
        views.push(cloud);
    }
    let merged = merge_views(&views, 0.002).unwrap();
    let merged_index = PointIndex::build(&merged.points);
    let reference = sample_mesh_surface(&mesh, 2000, 9).unwrap();
    let covered = reference
        .points
        .iter()
        .filter(|p| {
            merged_index
                .nearest(p)
                .map(|i| (merged.points[i] - *p).norm() <= 0.002)
                .unwrap_or(false)
        })
        .count();
    let frac = covered as f64 / reference.len() as f64;
    assert!(frac >= 0.95, "coverage {frac:.4}");
}

#[test]
fn seal_results_are_deterministic_and_rigid_invariant() {
    let cup = CupModel::preset("cup_15mm").unwrap();
    let spec = PadSpec {
        kind: PadKind::Tilt {
            angle: 3.0f64.to_radians(),
        },
        footprint: 0.06,
    };
    let scene = spec.make_scene().unwrap();
    let index = SceneIndex::build(&scene);
    let cand = centered_vertical_candidate(1);
    let base = evaluate_seal(&index, &cup, &cand);
    let again = evaluate_seal(&index, &cup, &cand);
    assert_eq!(base, again);

    let mut rng = ChaCha8Rng::seed_from_u64(36);
    for _ in 0..5 {
        let motion = Pose6D::new(
            *Rotation3::from_euler_angles(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            )
            .matrix(),
            Vec3::new(
                rng.random_range(-0.5..0.5),
                rng.random_range(-0.5..0.5),
                rng.random_range(-0.5..0.5),
            ),
        )
        .unwrap();
        let moved_scene = scene.transformed(&motion);
        let moved_index = SceneIndex::build(&moved_scene);
        let moved_cand = sgrasp_core::sampling::SuctionCandidate {
            pose: motion.compose(&cand.pose),
            instance_id: cand.instance_id,
            contact_index: cand.contact_index,
        };
        let moved = evaluate_seal(&moved_index, &cup, &moved_cand);
        assert_eq!(moved.passed, base.passed);
        assert_eq!(moved.hit_count, base.hit_count);
        assert!((moved.spread - base.spread).abs() < 1e-6);
    }
}

#[test]
fn wrench_monotone_in_force_limit_and_load_superadditive() {
    let tower = |masses: &[f64]| {
        make_stack_scene(
            &masses
                .iter()
                .map(|&m| BoxSpec {
                    half_extents: Vec3::new(0.05, 0.05, 0.04),
                    center_xy: (0.0, 0.0),
                    mass_kg: m,
                })
                .collect::<Vec<_>>(),
        )
        .unwrap()
    };
    let two = tower(&[1.1, 0.9]);
    let three = tower(&[1.1, 0.9, 0.7]);
    let g2 = build_support_graph(&two).unwrap();
    let g3 = build_support_graph(&three).unwrap();
    //

    // Adding a box strictly above never decreases any load below it.
    assert!(g3.load(1).unwrap() >= g2.load(1).unwrap());
    assert!(g3.load(2).unwrap() >= g2.load(2).unwrap());

    let cand = centered_vertical_candidate(1);
    let cand = sgrasp_core::sampling::SuctionCandidate {
        pose: Pose6D {
            rotation: cand.pose.rotation,
            translation: Vec3::new(0.0, 0.0, 0.08),
        },
        ..cand
    };
    let mut cup = CupModel::preset("cup_15mm").unwrap();
    let mut last_passed = false;
    for limit in [1.0, 5.0, 10.0, 20.0, 40.0, 80.0] {
        cup.force_limit = limit;
        let res = evaluate_wrench(&two, &g2, &cup, &cand).unwrap();
        if last_passed {
            assert!(res.passed, "passing at a lower limit but failing at {limit}");
        }
        last_passed = res.passed;
    }
    assert!(last_passed);
}

#[test]
fn short_circuit_q_equals_unconditional_product() {
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    let cup = CupModel::preset("cup_15mm").unwrap();
    let params = CollisionParams::default();
    for _ in 0..8 {
        let scene = make_stack_scene(&[
            BoxSpec {
                half_extents: Vec3::new(
                    rng.random_range(0.03..0.08),
                    rng.random_range(0.03..0.08),
                    rng.random_range(0.02..0.05),
                ),
                center_xy: (0.0, 0.0),
                mass_kg: rng.random_range(0.2..3.0),
            },
            BoxSpec {
                half_extents: Vec3::new(0.02, 0.02, 0.02),
                center_xy: (rng.random_range(-0.01..0.01), 0.0),
                mass_kg: rng.random_range(0.2..2.0),
            },
        ])
        .unwrap();
        let index = SceneIndex::build(&scene);
        let graph = build_support_graph(&scene).unwrap();
        let cloud = sample_mesh_surface(
            &scene.objects[0].mesh.transformed(&scene.objects[0].pose),
            60,
            rng.random(),
        )
        .unwrap();
        for i in 0..cloud.len() {
            let n = cloud.normals().unwrap()[i];
            let frame = {
                // Any right-handed frame with v1 = n.
                let v1 = n.into_inner();
                let pick = if v1.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
                let v3 = v1.cross(&pick).normalize();
                let v2 = v3.cross(&v1);
                let mut m = nalgebra::Matrix3::zeros();
                m.set_column(0, &v1);
                m.set_column(1, &v2);
                m.set_column(2, &v3);
                m
            };
            let cand = sgrasp_core::sampling::SuctionCandidate {
                pose: Pose6D {
                    rotation: frame,
                    translation: cloud.points[i].coords,
                },
                instance_id: 1,
                contact_index: i,
            };
            let record = evaluate_candidate_full(
                &scene,
                &index,
                &graph,
                &cup,
                &params,
                &cand,
                i,
                GateSelection::All,
            )
            .unwrap();
            // Unconditional product.
            let qc = evaluate_collision(&index, &cup, &cand, &params).passed;
            let qs = evaluate_seal(&index, &cup, &cand).passed;
            let qd = evaluate_wrench(&scene, &graph, &cup, &cand).unwrap().passed;
            let product = u8::from(qc && qs && qd);
            assert_eq!(record.q, product, "candidate {i}");
        }
    }
}

#[test]
fn candidate_frames_are_orthonormal_with_outward_v1() {
    let mut rng = ChaCha8Rng::seed_from_u64(38);
    let mut points = Vec::new();
    let mut normals = Vec::new();
    let mut labels = Vec::new();
    for i in 0..600 {
        let which = i % 3;
        let base = Vec3::new(which as f64 * 0.3, 0.0, 0.0);
        let x: f64 = rng.random_range(-0.03..0.03);
        let y: f64 = rng.random_range(-0.03..0.03);
        let z = 2.0 * x * x + 3.0 * y * y;
        points.push(Point3::from(base + Vec3::new(x, y, z)));
        normals.push(UnitVec3::new_normalize(Vec3::new(
            -4.0 * x,
            -6.0 * y,
            1.0,
        )));
        labels.push(which as u32 + 1);
    }
    let cloud = PointCloud::new(points, Some(normals), Some(labels)).unwrap();
    let (cands, _) = generate_candidates(
        &cloud,
        &SamplerConfig {
            samples_per_object: 40,
            frame_radius: 0.015,
            min_neighbors: 5,
        },
    )
    .unwrap();
    assert_eq!(cands.len(), 120);
    let normals = cloud.normals().unwrap();
    for c in &cands {
        let r = c.pose.rotation;
        assert!((r.transpose() * r - nalgebra::Matrix3::identity()).norm() < 1e-6);
        assert!((r.determinant() - 1.0).abs() < 1e-6);
        let v1 = r.column(0).into_owned();
        assert!(v1.dot(&normals[c.contact_index]) > 0.0);
    }
}

#[test]
fn safety_margin_filter_is_monotone() {
    let scene = sgrasp_core::fixtures::make_demo_scene();
    let index = SceneIndex::build(&scene);
    let surface = sample_mesh_surface(
        &scene.objects[0].mesh.transformed(&scene.objects[0].pose),
        50,
        7,
    )
    .unwrap();
    let cands: Vec<sgrasp_core::sampling::SuctionCandidate> = surface
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| sgrasp_core::sampling::SuctionCandidate {
            pose: Pose6D {
                rotation: nalgebra::Matrix3::identity(),
                translation: p.coords,
            },
            instance_id: 1,
            contact_index: i,
        })
        .collect();
    let mut last: Option<Vec<usize>> = None;
    for margin in [0.0, 0.002, 0.01, 0.03, 0.08] {
        let kept: Vec<usize> = safety_margin_filter(&index, &cands, margin)
            .unwrap()
            .iter()
            .map(|c| c.contact_index)
            .collect();
        if let Some(prev) = &last {
            assert!(
                kept.iter().all(|i| prev.contains(i)),
                "margin {margin} kept a candidate a smaller margin removed"
            );
        }
        last = Some(kept);
    }
}

proptest! {
    #[test]
    fn mse_is_symmetric_nonnegative_and_zero_iff_equal(
        a in prop::collection::vec(0.0f64..1.0, 1..200),
        b in prop::collection::vec(0.0f64..1.0, 1..200),
    ) {
        let n = a.len().min(b.len());
        let ma = ScoreMap { scores: a[..n].to_vec(), sources: None };
        let mb = ScoreMap { scores: b[..n].to_vec(), sources: None };
        let ab = mse_score(&ma, &mb).unwrap();
        let ba = mse_score(&mb, &ma).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert!((ab - ba).abs() < 1e-15);
        // Brute-force sum agreement.
        let brute: f64 = ma.scores.iter().zip(&mb.scores)
            .map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / n as f64;
        prop_assert!((ab - brute).abs() < 1e-12);
        prop_assert_eq!(mse_score(&ma, &ma).unwrap(), 0.0);
        if ab == 0.0 {
            prop_assert_eq!(&ma.scores, &mb.scores);
        }
    }

    #[test]
    fn annotation_positives_monotone_in_radius_and_candidates(
        seed in 0u64..1000,
        r1 in 0.005f64..0.05,
        extra in 0.0f64..0.05,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cloud = PointCloud::from_points(random_points(&mut rng, 300, 0.2));
        let index = PointIndex::build(&cloud.points);
        let contacts: Vec<(usize, Point3)> = (0..5)
            .map(|i| (i, Point3::new(
                rng.random_range(-0.2..0.2),
                rng.random_range(-0.2..0.2),
                rng.random_range(-0.2..0.2),
            )))
            .collect();
        let small = annotate_scores(&cloud, &index, &contacts[..3], r1).unwrap();
        let grown = annotate_scores(&cloud, &index, &contacts[..3], r1 + extra).unwrap();
        let more = annotate_scores(&cloud, &index, &contacts, r1).unwrap();
        prop_assert!(grown.positives() >= small.positives());
        prop_assert!(more.positives() >= small.positives());
    }
}
