//! File formats: PLY point clouds (ASCII and binary little-endian), OBJ and
//! binary STL meshes, depth maps (16-bit millimeter PGM or raw f32) with
//! JSON sidecars, scene descriptions, and the JSON Lines records the
//! pipeline stages exchange.

mod depthmap;
mod jsonl;
mod obj;
mod ply;
mod scene;
mod stl;

pub use depthmap::{load_depth_view, write_depth_view, DepthSidecar, DepthView};
pub use jsonl::{
    candidates_from_records, read_candidates, read_evaluations, read_ranked, records_from_candidates,
    write_candidates, write_evaluations, write_ranked, CandidateRecord, EvaluationWire, GateWire,
    RankedWire,
};
pub use obj::{load_obj, write_obj};
pub use ply::{load_ply, write_ply, PlyFormat};
pub use scene::{load_scene, write_scene, SceneFile, SceneObjectFile};
pub use stl::{load_stl, write_stl};
