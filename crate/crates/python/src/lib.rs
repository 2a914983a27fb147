//! Python bindings: the main types and pipeline operations behind a numpy
//! interface. Build the cdylib and import it as `sgrasp`.

use numpy::{IntoPyArray, PyArray1, PyArray2, PyReadonlyArray1, PyReadonlyArray2};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use sgrasp_core::annotation::{self, ScoreMap};
use sgrasp_core::config::PipelineConfig;
use sgrasp_core::cup::CupModel as CoreCup;
use sgrasp_core::fixtures;
use sgrasp_core::geometry::{
    self, Point3, PointCloud as CoreCloud, PointIndex, SceneIndex, SceneModel, UnitVec3, Vec3,
};
use sgrasp_core::io;
use sgrasp_core::metrics;
use sgrasp_core::policy::{self, RankedGrasp as CoreRanked};
use sgrasp_core::sampling::{self, SamplerConfig, SuctionCandidate as CoreCandidate};
use sgrasp_core::seal::CollisionParams;
use sgrasp_core::wrench::{self, GateSelection};

fn err(e: sgrasp_core::Error) -> PyErr {
    match e {
        sgrasp_core::Error::Io(io) => PyRuntimeError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

/// Point cloud with optional unit normals and instance labels.
#[pyclass(name = "PointCloud", from_py_object)]
#[derive(Clone)]
struct PyPointCloud {
    inner: CoreCloud,
}

#[pymethods]
impl PyPointCloud {
    /// PointCloud(points, normals=None, labels=None) with Nx3 float arrays.
    #[new]
    #[pyo3(signature = (points, normals=None, labels=None))]
    fn new(
        points: PyReadonlyArray2<f64>,
        normals: Option<PyReadonlyArray2<f64>>,
        labels: Option<PyReadonlyArray1<u32>>,
    ) -> PyResult<Self> {
        let pts = points.as_array();
        if pts.ncols() != 3 {
            return Err(PyValueError::new_err("points must be Nx3"));
        }
        let point_vec: Vec<Point3> = pts
            .rows()
            .into_iter()
            .map(|r| Point3::new(r[0], r[1], r[2]))
            .collect();
        let normal_vec = match normals {
            Some(ns) => {
                let ns = ns.as_array();
                if ns.dim() != pts.dim() {
                    return Err(PyValueError::new_err("normals must match points"));
                }
                Some(
                    ns.rows()
                        .into_iter()
                        .map(|r| UnitVec3::new_normalize(Vec3::new(r[0], r[1], r[2])))
                        .collect(),
                )
            }
            None => None,
        };
        let label_vec = labels.map(|ls| ls.as_array().to_vec());
        Ok(PyPointCloud {
            inner: CoreCloud::new(point_vec, normal_vec, label_vec).map_err(err)?,
        })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn points<'py>(&self, py: Python<'py>) -> Bound<'py, PyArray2<f64>> {
        let flat: Vec<f64> = self
            .inner
            .points
            .iter()
            .flat_map(|p| [p.x, p.y, p.z])
            .collect();
        numpy::ndarray::Array2::from_shape_vec((self.inner.len(), 3), flat)
            .expect("shape is consistent")
            .into_pyarray(py)
    }

    #[getter]
    fn normals<'py>(&self, py: Python<'py>) -> Option<Bound<'py, PyArray2<f64>>> {
        self.inner.normals.as_ref().map(|ns| {
            let flat: Vec<f64> = ns.iter().flat_map(|n| [n.x, n.y, n.z]).collect();
            numpy::ndarray::Array2::from_shape_vec((ns.len(), 3), flat)
                .expect("shape is consistent")
                .into_pyarray(py)
        })
    }

    #[getter]
    fn labels<'py>(&self, py: Python<'py>) -> Option<Bound<'py, PyArray1<u32>>> {
        self.inner
            .instance_labels
            .as_ref()
            .map(|ls| ls.clone().into_pyarray(py))
    }

    fn __repr__(&self) -> String {
        format!(
            "PointCloud({} points, normals={}, labels={})",
            self.inner.len(),
            self.inner.normals.is_some(),
            self.inner.instance_labels.is_some()
        )
    }
}

/// Suction cup discretization and limits.
#[pyclass(name = "CupModel", from_py_object)]
#[derive(Clone)]
struct PyCup {
    inner: CoreCup,
}

#[pymethods]
impl PyCup {
    #[staticmethod]
    fn preset(name: &str) -> PyResult<Self> {
        Ok(PyCup {
            inner: CoreCup::preset(name).map_err(err)?,
        })
    }

    #[getter]
    fn radius(&self) -> f64 {
        self.inner.radius
    }

    #[getter]
    fn rest_height(&self) -> f64 {
        self.inner.rest_height
    }

    #[getter]
    fn force_limit(&self) -> f64 {
        self.inner.force_limit
    }

    #[getter]
    fn vertex_count(&self) -> usize {
        self.inner.vertex_count()
    }

    fn __repr__(&self) -> String {
        format!(
            "CupModel(radius={}, rest_height={}, force_limit={})",
            self.inner.radius, self.inner.rest_height, self.inner.force_limit
        )
    }
}

/// 6D suction candidate: Darboux rotation columns [v1|v2|v3] and the
/// contact point.
#[pyclass(name = "SuctionCandidate", from_py_object)]
#[derive(Clone)]
struct PyCandidate {
    inner: CoreCandidate,
}

#[pymethods]
impl PyCandidate {
    #[getter]
    fn instance_id(&self) -> u32 {
        self.inner.instance_id
    }

    #[getter]
    fn contact_index(&self) -> usize {
        self.inner.contact_index
    }

    #[getter]
    fn translation<'py>(&self, py: Python<'py>) -> Bound<'py, PyArray1<f64>> {
        let t = self.inner.pose.translation;
        vec![t.x, t.y, t.z].into_pyarray(py)
    }

    #[getter]
    fn rotation<'py>(&self, py: Python<'py>) -> Bound<'py, PyArray2<f64>> {
        let r = self.inner.pose.rotation_row_major();
        numpy::ndarray::Array2::from_shape_vec((3, 3), r.to_vec())
            .expect("rotation is 3x3")
            .into_pyarray(py)
    }

    /// Direction the cup travels to reach the surface (unit vector).
    #[getter]
    fn approach_axis<'py>(&self, py: Python<'py>) -> Bound<'py, PyArray1<f64>> {
        let a = self.inner.approach_axis();
        vec![a.x, a.y, a.z].into_pyarray(py)
    }

    fn __repr__(&self) -> String {
        let t = self.inner.pose.translation;
        format!(
            "SuctionCandidate(instance={}, contact=({:.4}, {:.4}, {:.4}))",
            self.inner.instance_id, t.x, t.y, t.z
        )
    }
}

/// Per-candidate gate outcome.
#[pyclass(name = "Evaluation", from_py_object)]
#[derive(Clone)]
struct PyEvaluation {
    #[pyo3(get)]
    candidate_index: usize,
    /// 0, 1, or None when the gate was skipped.
    #[pyo3(get)]
    q_collision: Option<u8>,
    #[pyo3(get)]
    q_seal: Option<u8>,
    #[pyo3(get)]
    q_dynamics: Option<u8>,
    #[pyo3(get)]
    q: u8,
    #[pyo3(get)]
    spread: Option<f64>,
    #[pyo3(get)]
    hit_count: Option<usize>,
    #[pyo3(get)]
    blocking_instance: Option<u32>,
    #[pyo3(get)]
    payload_force: Option<f64>,
}

#[pymethods]
impl PyEvaluation {
    fn __repr__(&self) -> String {
        format!(
            "Evaluation(candidate={}, q={}, collision={:?}, seal={:?}, dynamics={:?})",
            self.candidate_index, self.q, self.q_collision, self.q_seal, self.q_dynamics
        )
    }
}

/// A ranked grasp.
#[pyclass(name = "RankedGrasp", from_py_object)]
#[derive(Clone)]
struct PyRanked {
    #[pyo3(get)]
    rank: usize,
    #[pyo3(get)]
    confidence: f64,
    #[pyo3(get)]
    candidate: PyCandidate,
}

#[pymethods]
impl PyRanked {
    fn __repr__(&self) -> String {
        format!(
            "RankedGrasp(rank={}, confidence={:.4})",
            self.rank, self.confidence
        )
    }
}

/// A posed rigid scene with its spatial index and support graph.
#[pyclass(name = "Scene")]
struct PyScene {
    scene: SceneModel,
    index: SceneIndex,
    graph: wrench::SupportGraph,
}

impl PyScene {
    fn build(scene: SceneModel) -> PyResult<Self> {
        let index = SceneIndex::build(&scene);
        let graph = wrench::build_support_graph(&scene).map_err(err)?;
        Ok(PyScene {
            scene,
            index,
            graph,
        })
    }
}

#[pymethods]
impl PyScene {
    /// Loads scene.json with its meshes.
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        PyScene::build(io::load_scene(std::path::Path::new(path)).map_err(err)?)
    }

    #[getter]
    fn instance_ids(&self) -> Vec<u32> {
        self.scene.objects.iter().map(|o| o.instance_id).collect()
    }

    #[getter]
    fn triangle_count(&self) -> usize {
        self.index.triangle_count()
    }

    /// Pile load (target mass plus everything resting on it), kg.
    fn pile_load(&self, instance_id: u32) -> PyResult<f64> {
        self.graph.load(instance_id).map_err(err)
    }

    /// Labeled surface cloud with analytic normals (see
    /// fixtures::scene_surface_cloud).
    #[pyo3(signature = (per_object, seed=0))]
    fn sample_surface_cloud(&self, per_object: usize, seed: u64) -> PyResult<PyPointCloud> {
        Ok(PyPointCloud {
            inner: fixtures::scene_surface_cloud(&self.scene, per_object, seed).map_err(err)?,
        })
    }

    /// Runs the collision / seal / wrench gates over candidates.
    /// gates: "all", "collision-only", "seal-only", or "no-dynamics".
    #[pyo3(signature = (candidates, cup, gates="all"))]
    fn evaluate(
        &self,
        candidates: Vec<PyCandidate>,
        cup: &PyCup,
        gates: &str,
    ) -> PyResult<Vec<PyEvaluation>> {
        let selection: GateSelection = gates.parse().map_err(err)?;
        let params = CollisionParams::default();
        candidates
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let record = wrench::evaluate_candidate_full(
                    &self.scene,
                    &self.index,
                    &self.graph,
                    &cup.inner,
                    &params,
                    &c.inner,
                    i,
                    selection,
                )
                .map_err(err)?;
                Ok(PyEvaluation {
                    candidate_index: record.candidate_index,
                    q_collision: record.q_collision.bit(),
                    q_seal: record.q_seal.bit(),
                    q_dynamics: record.q_dynamics.bit(),
                    q: record.q,
                    spread: record.seal.as_ref().map(|s| s.spread),
                    hit_count: record.seal.as_ref().map(|s| s.hit_count),
                    blocking_instance: record.collision.as_ref().and_then(|c| c.blocking_instance),
                    payload_force: record.wrench.as_ref().map(|w| w.payload_force),
                })
            })
            .collect()
    }

    /// Drops candidates whose contact lies within `margin` of another
    /// instance's surface.
    fn safety_margin_filter(
        &self,
        candidates: Vec<PyCandidate>,
        margin: f64,
    ) -> PyResult<Vec<PyCandidate>> {
        let inner: Vec<CoreCandidate> = candidates.iter().map(|c| c.inner).collect();
        Ok(policy::safety_margin_filter(&self.index, &inner, margin)
            .map_err(err)?
            .into_iter()
            .map(|c| PyCandidate { inner: c })
            .collect())
    }

    fn __repr__(&self) -> String {
        format!(
            "Scene({} objects, {} triangles, ground={})",
            self.scene.objects.len(),
            self.index.triangle_count(),
            self.scene.ground_plane
        )
    }
}

/// The bundled cluttered demo scene.
#[pyfunction]
fn demo_scene() -> PyResult<PyScene> {
    PyScene::build(fixtures::make_demo_scene())
}

/// Reads a PLY cloud; returns (cloud, scores or None).
#[pyfunction]
fn load_ply(py: Python<'_>, path: &str) -> PyResult<(PyPointCloud, Option<Py<PyArray1<f64>>>)> {
    let (cloud, scores) = io::load_ply(std::path::Path::new(path)).map_err(err)?;
    Ok((
        PyPointCloud { inner: cloud },
        scores.map(|s| s.into_pyarray(py).unbind()),
    ))
}

/// Writes a PLY cloud, optionally with a per-point score property.
#[pyfunction]
#[pyo3(signature = (path, cloud, scores=None, ascii=false))]
fn save_ply(
    path: &str,
    cloud: &PyPointCloud,
    scores: Option<PyReadonlyArray1<f64>>,
    ascii: bool,
) -> PyResult<()> {
    let format = if ascii {
        io::PlyFormat::Ascii
    } else {
        io::PlyFormat::BinaryLittleEndian
    };
    let score_vec = scores.map(|s| s.as_array().to_vec());
    io::write_ply(
        std::path::Path::new(path),
        &cloud.inner,
        score_vec.as_deref(),
        format,
    )
    .map_err(err)
}

/// k-NN plane-fit normals oriented toward the viewpoint.
#[pyfunction]
fn estimate_normals(
    cloud: &PyPointCloud,
    k: usize,
    viewpoint: [f64; 3],
) -> PyResult<PyPointCloud> {
    Ok(PyPointCloud {
        inner: geometry::estimate_normals(
            &cloud.inner,
            k,
            &Point3::new(viewpoint[0], viewpoint[1], viewpoint[2]),
        )
        .map_err(err)?,
    })
}

/// Greedy max-min farthest point sampling; returns selected indices.
#[pyfunction]
#[pyo3(signature = (cloud, k, seed_index=0))]
fn farthest_point_sampling<'py>(
    py: Python<'py>,
    cloud: &PyPointCloud,
    k: usize,
    seed_index: usize,
) -> PyResult<Bound<'py, PyArray1<usize>>> {
    Ok(geometry::farthest_point_sampling(&cloud.inner, k, seed_index)
        .map_err(err)?
        .into_pyarray(py))
}

/// Indices of all points within `radius` of `center`.
#[pyfunction]
fn ball_query<'py>(
    py: Python<'py>,
    cloud: &PyPointCloud,
    center: [f64; 3],
    radius: f64,
) -> PyResult<Bound<'py, PyArray1<usize>>> {
    let index = PointIndex::build(&cloud.inner.points);
    let mut hits = index
        .ball_query(&Point3::new(center[0], center[1], center[2]), radius)
        .map_err(err)?;
    hits.sort_unstable();
    Ok(hits.into_pyarray(py))
}

/// Concatenate clouds then deduplicate on a voxel grid.
#[pyfunction]
fn merge_views(clouds: Vec<PyPointCloud>, voxel: f64) -> PyResult<PyPointCloud> {
    let inner: Vec<CoreCloud> = clouds.into_iter().map(|c| c.inner).collect();
    Ok(PyPointCloud {
        inner: geometry::merge_views(&inner, voxel).map_err(err)?,
    })
}

/// Object-aware candidate sampling: FPS per labeled instance plus a Darboux
/// frame per contact.
#[pyfunction]
#[pyo3(signature = (cloud, samples_per_object=100, frame_radius=0.015, min_neighbors=5))]
fn generate_candidates(
    cloud: &PyPointCloud,
    samples_per_object: usize,
    frame_radius: f64,
    min_neighbors: usize,
) -> PyResult<Vec<PyCandidate>> {
    let config = SamplerConfig {
        samples_per_object,
        frame_radius,
        min_neighbors,
    };
    let (cands, _report) =
        sampling::generate_candidates(&cloud.inner, &config).map_err(err)?;
    Ok(cands
        .into_iter()
        .map(|inner| PyCandidate { inner })
        .collect())
}

/// Binary score map: 1 within `radius` of any passing candidate contact.
#[pyfunction]
#[pyo3(signature = (cloud, passing, radius=0.015))]
fn annotate_scores<'py>(
    py: Python<'py>,
    cloud: &PyPointCloud,
    passing: Vec<PyCandidate>,
    radius: f64,
) -> PyResult<Bound<'py, PyArray1<f64>>> {
    let index = PointIndex::build(&cloud.inner.points);
    let contacts: Vec<(usize, Point3)> = passing
        .iter()
        .enumerate()
        .map(|(i, c)| (i, c.inner.contact_point()))
        .collect();
    let map =
        annotation::annotate_scores(&cloud.inner, &index, &contacts, radius).map_err(err)?;
    Ok(map.scores.into_pyarray(py))
}

/// Flatness affordance in [0,1]; ground-plane points score 0.
#[pyfunction]
#[pyo3(signature = (cloud, radius=0.015))]
fn normal_variance_affordance<'py>(
    py: Python<'py>,
    cloud: &PyPointCloud,
    radius: f64,
) -> PyResult<Bound<'py, PyArray1<f64>>> {
    let index = PointIndex::build(&cloud.inner.points);
    let map = policy::normal_variance_affordance(&cloud.inner, &index, radius).map_err(err)?;
    Ok(map.scores.into_pyarray(py))
}

/// Stable descending sort by confidence with the documented tie break.
#[pyfunction]
fn rank_candidates(
    candidates: Vec<PyCandidate>,
    confidences: Vec<f64>,
) -> PyResult<Vec<PyRanked>> {
    let inner: Vec<CoreCandidate> = candidates.iter().map(|c| c.inner).collect();
    Ok(policy::rank_candidates(&inner, &confidences)
        .map_err(err)?
        .into_iter()
        .map(|r| PyRanked {
            rank: r.rank,
            confidence: r.confidence,
            candidate: PyCandidate {
                inner: r.candidate,
            },
        })
        .collect())
}

/// Top-k precision of a ranking against the scene's Q oracle. Returns a dict
/// with top1 / top1pct / top5pct / top10pct and bucket sizes.
#[pyfunction]
fn online_precision<'py>(
    py: Python<'py>,
    ranked: Vec<PyRanked>,
    scene: &PyScene,
    cup: &PyCup,
) -> PyResult<Bound<'py, pyo3::types::PyDict>> {
    let grasps: Vec<CoreRanked> = ranked
        .iter()
        .map(|r| CoreRanked {
            candidate: r.candidate.inner,
            confidence: r.confidence,
            rank: r.rank,
        })
        .collect();
    let params = CollisionParams::default();
    let report = metrics::online_precision(&grasps, |g| {
        Ok(wrench::evaluate_candidate_full(
            &scene.scene,
            &scene.index,
            &scene.graph,
            &cup.inner,
            &params,
            &g.candidate,
            0,
            GateSelection::All,
        )?
        .q == 1)
    })
    .map_err(err)?;
    let dict = pyo3::types::PyDict::new(py);
    dict.set_item("top1", report.top1)?;
    dict.set_item("top1pct", report.top1pct)?;
    dict.set_item("top5pct", report.top5pct)?;
    dict.set_item("top10pct", report.top10pct)?;
    dict.set_item("n_top1pct", report.n_top1pct)?;
    dict.set_item("n_top5pct", report.n_top5pct)?;
    dict.set_item("n_top10pct", report.n_top10pct)?;
    Ok(dict)
}

/// Mean squared error between two score maps.
#[pyfunction]
fn mse_score(predicted: PyReadonlyArray1<f64>, truth: PyReadonlyArray1<f64>) -> PyResult<f64> {
    let p = ScoreMap {
        scores: predicted.as_array().to_vec(),
        sources: None,
    };
    let t = ScoreMap {
        scores: truth.as_array().to_vec(),
        sources: None,
    };
    metrics::mse_score(&p, &t).map_err(err)
}

/// CSV comparison of the 960-vertex and 8-vertex seal models on the
/// procedural test board.
#[pyfunction]
fn model_comparison_csv(cup: &PyCup) -> PyResult<String> {
    Ok(metrics::model_comparison_report(&cup.inner)
        .map_err(err)?
        .to_csv())
}

/// Default pipeline configuration as a JSON string.
#[pyfunction]
fn default_config() -> String {
    PipelineConfig::default().to_pretty_json()
}

#[pymodule]
fn sgrasp(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPointCloud>()?;
    m.add_class::<PyCup>()?;
    m.add_class::<PyCandidate>()?;
    m.add_class::<PyEvaluation>()?;
    m.add_class::<PyRanked>()?;
    m.add_class::<PyScene>()?;
    m.add_function(wrap_pyfunction!(demo_scene, m)?)?;
    m.add_function(wrap_pyfunction!(load_ply, m)?)?;
    m.add_function(wrap_pyfunction!(save_ply, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_normals, m)?)?;
    m.add_function(wrap_pyfunction!(farthest_point_sampling, m)?)?;
    m.add_function(wrap_pyfunction!(ball_query, m)?)?;
    m.add_function(wrap_pyfunction!(merge_views, m)?)?;
    m.add_function(wrap_pyfunction!(generate_candidates, m)?)?;
    m.add_function(wrap_pyfunction!(annotate_scores, m)?)?;
    m.add_function(wrap_pyfunction!(normal_variance_affordance, m)?)?;
    m.add_function(wrap_pyfunction!(rank_candidates, m)?)?;
    m.add_function(wrap_pyfunction!(online_precision, m)?)?;
    m.add_function(wrap_pyfunction!(mse_score, m)?)?;
    m.add_function(wrap_pyfunction!(model_comparison_csv, m)?)?;
    m.add_function(wrap_pyfunction!(default_config, m)?)?;
    Ok(())
}
