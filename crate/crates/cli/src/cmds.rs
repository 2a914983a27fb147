use std::path::{Path, PathBuf};
use std::process::ExitCode;

use rayon::prelude::*;

use sgrasp_core::annotation::{annotate_scores, contributing_candidates};
use sgrasp_core::config::PipelineConfig;
use sgrasp_core::geometry::{
    camera_center, depth_to_pointcloud, estimate_normals, merge_views, PointIndex,
    SceneIndex, SceneModel,
};
use sgrasp_core::io::{
    self, load_depth_view, load_ply, load_scene, write_ply, write_scene, CandidateRecord,
    EvaluationWire, PlyFormat, RankedWire,
};
use sgrasp_core::metrics::{bucket_size, model_comparison_report, online_precision};
use sgrasp_core::policy::{
    confidences_from_map, normal_variance_affordance, rank_candidates, safety_margin_filter,
    RankedGrasp,
};
use sgrasp_core::sampling::{generate_candidates, SuctionCandidate};
use sgrasp_core::wrench::{
    build_support_graph, evaluate_candidate_full, GateSelection, SupportGraph,
};
use sgrasp_core::Error as CoreError;

/// CLI failure with the documented exit code: 2 for input/config problems,
/// 1 for runtime failures.
#[derive(Debug)]
pub struct CliError {
    message: String,
    code: u8,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> CliError {
        CliError {
            message: message.into(),
            code: 2,
        }
    }

    pub fn runtime(message: impl Into<String>) -> CliError {
        CliError {
            message: message.into(),
            code: 1,
        }
    }

    pub fn report(&self) -> ExitCode {
        eprintln!("error: {}", self.message);
        ExitCode::from(self.code)
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> CliError {
        let code = match &e {
            CoreError::Io(_) => 1,
            _ => 2,
        };
        CliError {
            message: e.to_string(),
            code,
        }
    }
}

type CmdResult = Result<(), CliError>;

fn read_input<T>(what: &str, path: &Path, res: sgrasp_core::Result<T>) -> Result<T, CliError> {
    res.map_err(|e| CliError::input(format!("{what} {}: {e}", path.display())))
}

/// Runs `op` inside a rayon pool of the configured size.
fn with_pool<T: Send>(jobs: usize, op: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if jobs > 0 {
        builder = builder.num_threads(jobs);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::runtime(format!("thread pool: {e}")))?;
    Ok(pool.install(op))
}

pub fn fuse(config: &PipelineConfig, depth_dir: &Path, out: &Path, ascii: bool) -> CmdResult {
    let mut files: Vec<PathBuf> = std::fs::read_dir(depth_dir)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", depth_dir.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            let ext = p.extension().and_then(|e| e.to_str()).unwrap_or("");
            let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
            (ext == "pgm" || ext == "f32") && !name.ends_with("_labels.pgm")
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::input(format!(
            "no depth views (*.pgm, *.f32) found in {}",
            depth_dir.display()
        )));
    }
    let mut views = Vec::with_capacity(files.len());
    for file in &files {
        let view = load_depth_view(file).map_err(CliError::from)?;
        let cloud = depth_to_pointcloud(
            &view.depth,
            &view.intrinsics,
            &view.extrinsic,
            view.labels.as_deref(),
        )
        .map_err(CliError::from)?;
        if cloud.is_empty() {
            continue;
        }
        // Orient normals toward this view's own camera before merging.
        let with_normals = estimate_normals(
            &cloud,
            config.normals_k.min(cloud.len()),
            &camera_center(&view.extrinsic),
        )
        .map_err(CliError::from)?;
        views.push(with_normals);
    }
    if views.is_empty() {
        return Err(CliError::input("all depth views were empty"));
    }
    let merged = merge_views(&views, config.merge_voxel).map_err(CliError::from)?;
    let format = if ascii {
        PlyFormat::Ascii
    } else {
        PlyFormat::BinaryLittleEndian
    };
    write_ply(out, &merged, None, format).map_err(CliError::from)?;
    println!(
        "fused {} views into {} points -> {}",
        views.len(),
        merged.len(),
        out.display()
    );
    Ok(())
}

pub fn sample(config: &PipelineConfig, cloud_path: &Path, out: &Path) -> CmdResult {
    let (cloud, _) = read_input("cloud", cloud_path, load_ply(cloud_path))?;
    let (candidates, report) =
        generate_candidates(&cloud, &config.sampler).map_err(CliError::from)?;
    io::write_candidates(out, &io::records_from_candidates(&candidates))
        .map_err(CliError::from)?;
    println!(
        "sampled {} candidates over {} objects -> {}",
        candidates.len(),
        report.per_object.len(),
        out.display()
    );
    for (id, available, produced) in &report.per_object {
        println!("  instance {id}: {produced} candidates from {available} points");
    }
    if !report.clamped_objects.is_empty() {
        println!("  clamped (fewer points than requested): {:?}", report.clamped_objects);
    }
    if report.fallback_frames > 0 {
        println!("  fallback frames: {}", report.fallback_frames);
    }
    Ok(())
}

struct LoadedScene {
    scene: SceneModel,
    index: SceneIndex,
    graph: SupportGraph,
}

fn load_scene_bundle(path: &Path) -> Result<LoadedScene, CliError> {
    let scene = load_scene(path).map_err(CliError::from)?;
    let index = SceneIndex::build(&scene);
    let graph = build_support_graph(&scene).map_err(CliError::from)?;
    Ok(LoadedScene {
        scene,
        index,
        graph,
    })
}

fn load_candidates(path: &Path) -> Result<Vec<SuctionCandidate>, CliError> {
    let records = read_input("candidates", path, io::read_candidates(path))?;
    io::candidates_from_records(&records).map_err(CliError::from)
}

pub fn evaluate(
    config: &PipelineConfig,
    scene_path: &Path,
    candidates_path: &Path,
    out: &Path,
    gate: Option<GateSelection>,
) -> CmdResult {
    let gates = gate.unwrap_or(config.gates);
    let bundle = load_scene_bundle(scene_path)?;
    let candidates = load_candidates(candidates_path)?;
    let cup = config.cup.resolve().map_err(CliError::from)?;
    let params = config.collision;

    let records: Vec<EvaluationWire> = with_pool(config.jobs, || {
        candidates
            .par_iter()
            .enumerate()
            .map(|(i, cand)| {
                evaluate_candidate_full(
                    &bundle.scene,
                    &bundle.index,
                    &bundle.graph,
                    &cup,
                    &params,
                    cand,
                    i,
                    gates,
                )
                .map(|r| EvaluationWire::from_record(&r))
            })
            .collect::<sgrasp_core::Result<Vec<_>>>()
    })?
    .map_err(CliError::from)?;

    io::write_evaluations(out, &records).map_err(CliError::from)?;
    let count = |f: &dyn Fn(&EvaluationWire) -> bool| records.iter().filter(|r| f(r)).count();
    let gate_line = |name: &str, get: &dyn Fn(&EvaluationWire) -> io::GateWire| {
        let evaluated = count(&|r| !matches!(get(r), io::GateWire::Text(_)));
        let passed = count(&|r| matches!(get(r), io::GateWire::Bit(b) if b == 1));
        println!("  {name}: {passed} passed / {evaluated} evaluated");
    };
    println!("evaluated {} candidates -> {}", records.len(), out.display());
    gate_line("q_collision", &|r| r.q_collision);
    gate_line("q_seal", &|r| r.q_seal);
    gate_line("q_dynamics", &|r| r.q_dynamics);
    println!("  q=1: {}", count(&|r| r.q == 1));
    Ok(())
}

pub fn annotate(
    config: &PipelineConfig,
    cloud_path: &Path,
    candidates_path: &Path,
    evaluations_path: &Path,
    out: &Path,
) -> CmdResult {
    let (cloud, _) = read_input("cloud", cloud_path, load_ply(cloud_path))?;
    let candidates = load_candidates(candidates_path)?;
    let evaluations = read_input(
        "evaluations",
        evaluations_path,
        io::read_evaluations(evaluations_path),
    )?;
    let mut contacts = Vec::new();
    for record in &evaluations {
        if record.q != 1 {
            continue;
        }
        let cand = candidates.get(record.candidate).ok_or_else(|| {
            CliError::input(format!(
                "evaluation references candidate {} but only {} exist",
                record.candidate,
                candidates.len()
            ))
        })?;
        contacts.push((record.candidate, cand.contact_point()));
    }
    let index = PointIndex::build(&cloud.points);
    let map = annotate_scores(&cloud, &index, &contacts, config.annotation_radius)
        .map_err(CliError::from)?;
    write_ply(out, &cloud, Some(&map.scores), PlyFormat::BinaryLittleEndian)
        .map_err(CliError::from)?;
    let sidecar = serde_json::json!({
        "radius": config.annotation_radius,
        "positive_points": map.positives(),
        "contributing_candidates": contributing_candidates(&map),
    });
    std::fs::write(
        out.with_extension("json"),
        serde_json::to_string_pretty(&sidecar).expect("sidecar serializes"),
    )
    .map_err(|e| CliError::runtime(e.to_string()))?;
    println!(
        "annotated {} / {} points from {} passing candidates -> {}",
        map.positives(),
        cloud.len(),
        contacts.len(),
        out.display()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn rank(
    config: &PipelineConfig,
    cloud_path: &Path,
    candidates_path: &Path,
    scene_path: &Path,
    scores_path: Option<&Path>,
    out: &Path,
    export_scored: Option<&Path>,
) -> CmdResult {
    let (cloud, _) = read_input("cloud", cloud_path, load_ply(cloud_path))?;
    let candidates = load_candidates(candidates_path)?;
    let scene = load_scene(scene_path).map_err(CliError::from)?;
    let scene_index = SceneIndex::build(&scene);

    let map = match scores_path {
        Some(path) => {
            let (score_cloud, scores) = read_input("scores", path, load_ply(path))?;
            let scores = scores.ok_or_else(|| {
                CliError::input(format!("{} has no score property", path.display()))
            })?;
            if score_cloud.len() != cloud.len() {
                return Err(CliError::input(format!(
                    "score map has {} points but cloud has {}",
                    score_cloud.len(),
                    cloud.len()
                )));
            }
            sgrasp_core::annotation::ScoreMap {
                scores,
                sources: None,
            }
        }
        None => {
            let index = PointIndex::build(&cloud.points);
            normal_variance_affordance(&cloud, &index, config.affordance_radius)
                .map_err(CliError::from)?
        }
    };

    let kept = safety_margin_filter(&scene_index, &candidates, config.safety_margin)
        .map_err(CliError::from)?;
    let confidences = confidences_from_map(&kept, &map).map_err(CliError::from)?;
    let ranked = rank_candidates(&kept, &confidences).map_err(CliError::from)?;
    let wires: Vec<RankedWire> = ranked
        .iter()
        .map(|r| {
            let rec = CandidateRecord::from_candidate(&r.candidate);
            RankedWire {
                rank: r.rank,
                confidence: r.confidence,
                instance_id: rec.instance_id,
                translation: rec.translation,
                rotation: rec.rotation,
                contact_index: rec.contact_index,
            }
        })
        .collect();
    io::write_ranked(out, &wires).map_err(CliError::from)?;
    if let Some(path) = export_scored {
        write_ply(path, &cloud, Some(&map.scores), PlyFormat::BinaryLittleEndian)
            .map_err(CliError::from)?;
    }
    println!(
        "ranked {} candidates ({} removed by {}m safety margin) -> {}",
        wires.len(),
        candidates.len() - kept.len(),
        config.safety_margin,
        out.display()
    );
    Ok(())
}

pub fn metrics(config: &PipelineConfig, scene_dirs: &[PathBuf], out: Option<&Path>) -> CmdResult {
    let cup = config.cup.resolve().map_err(CliError::from)?;
    let params = config.collision;
    struct SceneEval {
        name: String,
        ranked: Vec<RankedGrasp>,
        bundle: LoadedScene,
    }
    let mut scenes = Vec::new();
    for dir in scene_dirs {
        let ranked_path = dir.join("ranked.jsonl");
        let wires = read_input("ranked", &ranked_path, io::read_ranked(&ranked_path))?;
        if wires.is_empty() {
            return Err(CliError::input(format!(
                "{}: empty ranking",
                ranked_path.display()
            )));
        }
        let ranked: Vec<RankedGrasp> = wires
            .iter()
            .map(|w| {
                let rec = CandidateRecord {
                    instance_id: w.instance_id,
                    translation: w.translation,
                    rotation: w.rotation,
                    contact_index: w.contact_index,
                };
                rec.to_candidate().map(|candidate| RankedGrasp {
                    candidate,
                    confidence: w.confidence,
                    rank: w.rank,
                })
            })
            .collect::<sgrasp_core::Result<_>>()
            .map_err(CliError::from)?;
        let bundle = load_scene_bundle(&dir.join("scene.json"))?;
        let name = dir
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or("scene")
            .to_string();
        scenes.push(SceneEval {
            name,
            ranked,
            bundle,
        });
    }

    let oracle = |bundle: &LoadedScene, grasp: &RankedGrasp| -> sgrasp_core::Result<bool> {
        Ok(evaluate_candidate_full(
            &bundle.scene,
            &bundle.index,
            &bundle.graph,
            &cup,
            &params,
            &grasp.candidate,
            0,
            GateSelection::All,
        )?
        .q == 1)
    };

    let mut rows: Vec<(String, [f64; 4], usize)> = Vec::new();
    for scene in &scenes {
        let report = online_precision(&scene.ranked, |g| oracle(&scene.bundle, g))
            .map_err(CliError::from)?;
        rows.push((
            scene.name.clone(),
            [report.top1, report.top1pct, report.top5pct, report.top10pct],
            scene.ranked.len(),
        ));
    }
    // Mean over scenes.
    let n_scenes = rows.len() as f64;
    let mean: [f64; 4] = std::array::from_fn(|k| rows.iter().map(|r| r.1[k]).sum::<f64>() / n_scenes);
    // Pooled across scenes: merge all grasps by confidence and re-bucket.
    let mut pooled: Vec<(usize, &RankedGrasp)> = scenes
        .iter()
        .enumerate()
        .flat_map(|(si, s)| s.ranked.iter().map(move |g| (si, g)))
        .collect();
    pooled.sort_by(|a, b| {
        b.1.confidence
            .total_cmp(&a.1.confidence)
            .then(a.0.cmp(&b.0))
            .then(a.1.candidate.contact_index.cmp(&b.1.candidate.contact_index))
    });
    let n_pool = pooled.len();
    let deepest = bucket_size(0.10, n_pool).max(1);
    let mut verdicts = Vec::with_capacity(deepest);
    for (si, grasp) in pooled.iter().take(deepest) {
        verdicts.push(oracle(&scenes[*si].bundle, grasp).map_err(CliError::from)?);
    }
    let pooled_precision = |k: usize| verdicts[..k].iter().filter(|&&q| q).count() as f64 / k as f64;
    let pooled_row: [f64; 4] = [
        pooled_precision(1),
        pooled_precision(bucket_size(0.01, n_pool)),
        pooled_precision(bucket_size(0.05, n_pool)),
        pooled_precision(bucket_size(0.10, n_pool)),
    ];

    let mut csv = String::from("scope,top1,top1pct,top5pct,top10pct,candidates\n");
    println!("scope            top-1   top-1%  top-5%  top-10%   n");
    let mut emit = |name: &str, vals: &[f64; 4], n: usize| {
        println!(
            "{name:<16} {:>6.3} {:>7.3} {:>7.3} {:>8.3} {n:>5}",
            vals[0], vals[1], vals[2], vals[3]
        );
        csv.push_str(&format!(
            "{name},{},{},{},{},{n}\n",
            vals[0], vals[1], vals[2], vals[3]
        ));
    };
    for (name, vals, n) in &rows {
        emit(name, vals, *n);
    }
    let total: usize = rows.iter().map(|r| r.2).sum();
    emit("mean_over_scenes", &mean, total);
    emit("pooled", &pooled_row, n_pool);
    if let Some(path) = out {
        std::fs::write(path, csv).map_err(|e| CliError::runtime(e.to_string()))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

pub fn compare_models(config: &PipelineConfig, out: Option<&Path>) -> CmdResult {
    let cup = config.cup.resolve().map_err(CliError::from)?;
    let report = model_comparison_report(&cup).map_err(CliError::from)?;
    println!("pad              expected  full_960  perimeter_8  disagreement");
    for row in &report.rows {
        println!(
            "{:<16} {:>8} {:>9} {:>12} {:>13}",
            row.pad, row.expected, row.full_960, row.perimeter_8, row.disagreement
        );
    }
    println!(
        "full model correct on {}/{} pads; perimeter model correct on {}/{}",
        report.full_correct,
        report.rows.len(),
        report.perimeter_correct,
        report.rows.len()
    );
    println!("disagreements: {:?}", report.disagreements);
    if let Some(path) = out {
        std::fs::write(path, report.to_csv())
            .map_err(|e| CliError::runtime(e.to_string()))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

pub fn fixtures(config: &PipelineConfig, emit: &Path) -> CmdResult {
    use sgrasp_core::fixtures as fx;
    let cup = config.cup.resolve().map_err(CliError::from)?;
    let mkdir = |p: &Path| {
        std::fs::create_dir_all(p).map_err(|e| CliError::runtime(format!("{}: {e}", p.display())))
    };

    // Board pads.
    for pad in fx::standard_board(&cup) {
        let dir = emit.join("pads").join(pad.name);
        mkdir(&dir)?;
        let scene = pad.spec.make_scene().map_err(CliError::from)?;
        write_scene(&dir.join("scene.json"), &scene).map_err(CliError::from)?;
        let meta = serde_json::json!({
            "spec": pad.spec,
            "expected_seal": pad.expected_seal,
            "coarse_false_positive": pad.coarse_false_positive,
        });
        std::fs::write(
            dir.join("pad.json"),
            serde_json::to_string_pretty(&meta).expect("pad meta serializes"),
        )
        .map_err(|e| CliError::runtime(e.to_string()))?;
    }

    // Stack scenes for the pile-load gate.
    let stacks = [
        (
            "two_box",
            vec![
                fx::BoxSpec {
                    half_extents: sgrasp_core::geometry::Vec3::new(0.06, 0.06, 0.05),
                    center_xy: (0.0, 0.0),
                    mass_kg: 1.5,
                },
                fx::BoxSpec {
                    half_extents: sgrasp_core::geometry::Vec3::new(0.04, 0.04, 0.04),
                    center_xy: (0.0, 0.0),
                    mass_kg: 1.0,
                },
            ],
        ),
        (
            "three_box_tower",
            vec![
                fx::BoxSpec {
                    half_extents: sgrasp_core::geometry::Vec3::new(0.05, 0.05, 0.04),
                    center_xy: (0.0, 0.0),
                    mass_kg: 1.0,
                };
                3
            ],
        ),
    ];
    for (name, specs) in &stacks {
        let dir = emit.join("stacks").join(name);
        mkdir(&dir)?;
        let scene = fx::make_stack_scene(specs).map_err(CliError::from)?;
        write_scene(&dir.join("scene.json"), &scene).map_err(CliError::from)?;
    }

    // Demo scene with rendered depth views for the full pipeline.
    let demo_dir = emit.join("demo");
    let views_dir = demo_dir.join("views");
    mkdir(&views_dir)?;
    let scene = fx::make_demo_scene();
    write_scene(&demo_dir.join("scene.json"), &scene).map_err(CliError::from)?;
    let index = SceneIndex::build(&scene);
    let intr = sgrasp_core::geometry::CameraIntrinsics {
        fx: 160.0,
        fy: 160.0,
        cx: 80.0,
        cy: 60.0,
        width: 160,
        height: 120,
    };
    let eyes = [
        sgrasp_core::geometry::Point3::new(0.28, 0.18, 0.30),
        sgrasp_core::geometry::Point3::new(-0.30, 0.12, 0.26),
        sgrasp_core::geometry::Point3::new(0.04, -0.32, 0.34),
    ];
    let target = sgrasp_core::geometry::Point3::new(0.0, 0.0, 0.03);
    for (i, eye) in eyes.iter().enumerate() {
        let extr = fx::look_at(*eye, target);
        let (depth, labels) = fx::render_depth(&index, &intr, &extr, 5.0);
        io::write_depth_view(
            &views_dir.join(format!("view_{i:03}.pgm")),
            &depth,
            &intr,
            &extr,
            Some(&labels),
        )
        .map_err(CliError::from)?;
    }
    println!(
        "emitted {} pads, {} stacks, and the demo scene under {}",
        fx::standard_board(&cup).len(),
        stacks.len(),
        emit.display()
    );
    Ok(())
}
