//! Brute-force oracle equivalence: the accelerated implementations must
//! reproduce exhaustive reference computations exactly on randomized
//! instances. The oracles here are independent reimplementations and must
//! stay free of the library's spatial index types.

use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sgrasp_core::annotation::annotate_scores;
use sgrasp_core::geometry::{
    farthest_point_sampling, Point3, PointCloud, PointIndex, Pose6D, SceneIndex, SceneModel,
    SceneObject, TriangleMesh, UnitVec3, Vec3,
};
use sgrasp_core::metrics::{bucket_size, online_precision};
use sgrasp_core::policy::{rank_candidates, RankedGrasp};
use sgrasp_core::sampling::SuctionCandidate;

const TRIALS: usize = 20;

fn random_cloud(rng: &mut ChaCha8Rng, n: usize, extent: f64) -> PointCloud {
    PointCloud::from_points(
        (0..n)
            .map(|_| {
                Point3::new(
                    rng.random_range(-extent..extent),
                    rng.random_range(-extent..extent),
                    rng.random_range(-extent..extent),
                )
            })
            .collect(),
    )
}

#[test]
fn ball_query_matches_brute_force_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for trial in 0..TRIALS {
        let n = rng.random_range(50..=1000);
        let cloud = random_cloud(&mut rng, n, 1.0);
        let index = PointIndex::build(&cloud.points);
        for _ in 0..10 {
            let center = Point3::new(
                rng.random_range(-1.2..1.2),
                rng.random_range(-1.2..1.2),
                rng.random_range(-1.2..1.2),
            );
            let radius = rng.random_range(0.01..1.5);
            let mut got = index.ball_query(&center, radius).unwrap();
            got.sort_unstable();
            let expected: Vec<usize> = (0..n)
                .filter(|&i| (cloud.points[i] - center).norm_squared() <= radius * radius)
                .collect();
            assert_eq!(got, expected, "trial {trial}");
        }
    }
}

/// Reference FPS: recompute every min-distance from scratch each round.
fn fps_oracle(points: &[Point3], k: usize, seed: usize) -> Vec<usize> {
    let mut selected = vec![seed];
    while selected.len() < k {
        let mut best = usize::MAX;
        let mut best_d = f64::NEG_INFINITY;
        for i in 0..points.len() {
            let min_d = selected
                .iter()
                .map(|&s| (points[i] - points[s]).norm_squared())
                .fold(f64::INFINITY, f64::min);
            if min_d > best_d {
                best_d = min_d;
                best = i;
            }
        }
        selected.push(best);
    }
    selected
}

#[test]
fn fps_matches_greedy_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    for trial in 0..TRIALS {
        let n = rng.random_range(20..=1000);
        let cloud = random_cloud(&mut rng, n, 0.5);
        let k = rng.random_range(1..=n.min(50));
        let seed = rng.random_range(0..n);
        let got = farthest_point_sampling(&cloud, k, seed).unwrap();
        let expected = fps_oracle(&cloud.points, k, seed);
        assert_eq!(got, expected, "trial {trial}: n={n} k={k} seed={seed}");
    }
}

/// Independent ray/triangle test: plane intersection plus barycentric signs,
/// no shared code with the library's traversal.
fn oracle_ray_triangle(
    origin: &Point3,
    dir: &Vec3,
    a: &Point3,
    b: &Point3,
    c: &Point3,
) -> Option<f64> {
    let n = (b - a).cross(&(c - a));
    let denom = n.dot(dir);
    if denom.abs() < 1e-14 {
        return None;
    }
    let t = n.dot(&(a - origin)) / denom;
    if t < 0.0 {
        return None;
    }
    let p = origin + dir * t;
    let area2 = n.norm();
    let w0 = (b - p).cross(&(c - p)).norm() / area2;
    let w1 = (c - p).cross(&(a - p)).norm() / area2;
    let w2 = (a - p).cross(&(b - p)).norm() / area2;
    ((w0 + w1 + w2) <= 1.0 + 1e-9).then_some(t)
}

fn random_soup_scene(rng: &mut ChaCha8Rng) -> SceneModel {
    let n_objects = rng.random_range(2..=4);
    let mut objects = Vec::new();
    for id in 1..=n_objects {
        let n_tris = rng.random_range(30..=120);
        let center = Vec3::new(
            rng.random_range(-0.3..0.3),
            rng.random_range(-0.3..0.3),
            rng.random_range(0.1..0.5),
        );
        let mut verts = Vec::with_capacity(3 * n_tris);
        let mut tris = Vec::with_capacity(n_tris);
        for t in 0..n_tris {
            for _ in 0..3 {
                verts.push(Point3::from(
                    center
                        + Vec3::new(
                            rng.random_range(-0.1..0.1),
                            rng.random_range(-0.1..0.1),
                            rng.random_range(-0.1..0.1),
                        ),
                ));
            }
            let base = (3 * t) as u32;
            tris.push([base, base + 1, base + 2]);
        }
        let (mesh, _) = TriangleMesh::new(verts, tris).unwrap();
        objects.push(SceneObject {
            instance_id: id,
            mesh,
            pose: Pose6D::identity(),
            mass_kg: 1.0,
            friction: 0.5,
        });
    }
    SceneModel::new(objects, rng.random_bool(0.5)).unwrap()
}

#[test]
fn ray_cast_matches_exhaustive_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    for trial in 0..TRIALS {
        let scene = random_soup_scene(&mut rng);
        let index = SceneIndex::build(&scene);
        for ray in 0..50 {
            let origin = Point3::new(
                rng.random_range(-0.5..0.5),
                rng.random_range(-0.5..0.5),
                rng.random_range(-0.2..0.8),
            );
            let dir_v = Vec3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            if dir_v.norm() < 1e-3 {
                continue;
            }
            let dir = UnitVec3::new_normalize(dir_v);
            let max_dist = rng.random_range(0.1..2.0);

            // Exhaustive reference over every world triangle + ground.
            let mut best: Option<(f64, u32, Option<usize>)> = None;
            let mut offer = |t: f64, id: u32, tri: Option<usize>| {
                if t > max_dist {
                    return;
                }
                match best {
                    Some((bt, bid, btri))
                        if bt < t || (bt == t && (bid, btri) <= (id, tri)) => {}
                    _ => best = Some((t, id, tri)),
                }
            };
            if scene.ground_plane && dir.z != 0.0 {
                let t = -origin.z / dir.z;
                if t >= 0.0 {
                    offer(t, 0, None);
                }
            }
            for obj in &scene.objects {
                for (ti, _) in obj.mesh.triangles.iter().enumerate() {
                    let [a, b, c] = obj.mesh.triangle_vertices(ti);
                    let (a, b, c) = (
                        obj.pose.transform_point(&a),
                        obj.pose.transform_point(&b),
                        obj.pose.transform_point(&c),
                    );
                    if let Some(t) = oracle_ray_triangle(&origin, &dir, &a, &b, &c) {
                        offer(t, obj.instance_id, Some(ti));
                    }
                }
            }

            let got = index.ray_cast(&origin, &dir, max_dist);
            match (got, best) {
                (None, None) => {}
                (Some(h), Some((t, id, tri))) => {
                    assert_eq!(h.instance_id, id, "trial {trial} ray {ray}");
                    assert_eq!(h.triangle, tri, "trial {trial} ray {ray}");
                    assert!(
                        (h.distance - t).abs() < 1e-9,
                        "trial {trial} ray {ray}: {} vs {}",
                        h.distance,
                        t
                    );
                }
                (got, best) => panic!("trial {trial} ray {ray}: {got:?} vs {best:?}"),
            }
        }
    }
}

#[test]
fn annotate_scores_matches_double_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    for trial in 0..TRIALS {
        let n = rng.random_range(100..=5000);
        let cloud = random_cloud(&mut rng, n, 0.3);
        let index = PointIndex::build(&cloud.points);
        let n_cands = rng.random_range(0..=30);
        let contacts: Vec<(usize, Point3)> = (0..n_cands)
            .map(|i| {
                (
                    i,
                    Point3::new(
                        rng.random_range(-0.3..0.3),
                        rng.random_range(-0.3..0.3),
                        rng.random_range(-0.3..0.3),
                    ),
                )
            })
            .collect();
        let radius = rng.random_range(0.005..0.1);
        let map = annotate_scores(&cloud, &index, &contacts, radius).unwrap();
        for (i, p) in cloud.points.iter().enumerate() {
            let expected = contacts
                .iter()
                .any(|(_, t)| (p - t).norm_squared() <= radius * radius);
            assert_eq!(map.scores[i] > 0.0, expected, "trial {trial} point {i}");
        }
    }
}

#[test]
fn online_precision_matches_recount() {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    for trial in 0..TRIALS {
        let n = rng.random_range(1..=200);
        let cands: Vec<SuctionCandidate> = (0..n)
            .map(|i| SuctionCandidate {
                pose: Pose6D {
                    rotation: Matrix3::identity(),
                    translation: Vec3::zeros(),
                },
                instance_id: 1,
                contact_index: i,
            })
            .collect();
        let confidences: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let ranked: Vec<RankedGrasp> = rank_candidates(&cands, &confidences).unwrap();
        let q: Vec<bool> = (0..n).map(|_| rng.random_bool(0.4)).collect();
        let report =
            online_precision(&ranked, |g| Ok(q[g.candidate.contact_index])).unwrap();
        let recount = |k: usize| {
            ranked[..k]
                .iter()
                .filter(|g| q[g.candidate.contact_index])
                .count() as f64
                / k as f64
        };
        assert_eq!(report.top1, recount(1), "trial {trial}");
        assert_eq!(report.top1pct, recount(bucket_size(0.01, n)), "trial {trial}");
        assert_eq!(report.top5pct, recount(bucket_size(0.05, n)), "trial {trial}");
        assert_eq!(report.top10pct, recount(bucket_size(0.10, n)), "trial {trial}");
    }
}
