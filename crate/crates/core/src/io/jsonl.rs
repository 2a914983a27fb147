use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::geometry::Pose6D;
use crate::sampling::SuctionCandidate;
use crate::wrench::{EvaluationRecord, Gate};
use crate::{Error, Result};

/// One candidate per JSON line.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CandidateRecord {
    pub instance_id: u32,
    /// Contact point, m.
    pub translation: [f64; 3],
    /// Row-major Darboux rotation.
    pub rotation: [f64; 9],
    pub contact_index: usize,
}

impl CandidateRecord {
    pub fn from_candidate(c: &SuctionCandidate) -> CandidateRecord {
        CandidateRecord {
            instance_id: c.instance_id,
            translation: [
                c.pose.translation.x,
                c.pose.translation.y,
                c.pose.translation.z,
            ],
            rotation: c.pose.rotation_row_major(),
            contact_index: c.contact_index,
        }
    }

    pub fn to_candidate(&self) -> Result<SuctionCandidate> {
        Ok(SuctionCandidate {
            pose: Pose6D::from_row_major(&self.rotation, &self.translation)?,
            instance_id: self.instance_id,
            contact_index: self.contact_index,
        })
    }
}

pub fn records_from_candidates(cands: &[SuctionCandidate]) -> Vec<CandidateRecord> {
    cands.iter().map(CandidateRecord::from_candidate).collect()
}

pub fn candidates_from_records(records: &[CandidateRecord]) -> Result<Vec<SuctionCandidate>> {
    records.iter().map(|r| r.to_candidate()).collect()
}

/// Gate bit on the wire: 0, 1, or "skipped".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GateWire {
    Bit(u8),
    Text(SkippedTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkippedTag {
    Skipped,
}

impl From<Gate> for GateWire {
    fn from(g: Gate) -> GateWire {
        match g.bit() {
            Some(b) => GateWire::Bit(b),
            None => GateWire::Text(SkippedTag::Skipped),
        }
    }
}

impl GateWire {
    pub fn as_gate(self) -> Gate {
        match self {
            GateWire::Bit(0) => Gate::Failed,
            GateWire::Bit(_) => Gate::Passed,
            GateWire::Text(_) => Gate::Skipped,
        }
    }
}

/// One evaluation per JSON line: gate bits, Q, and the diagnostics the
/// evaluated gates produced.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvaluationWire {
    pub candidate: usize,
    pub q_collision: GateWire,
    pub q_seal: GateWire,
    pub q_dynamics: GateWire,
    pub q: u8,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spread: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hit_count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub foreign_hits: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blocking_instance: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clearance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub payload_force: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gravity_torque: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bend_angle: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure_reason: Option<crate::wrench::WrenchFailure>,
}

impl EvaluationWire {
    pub fn from_record(r: &EvaluationRecord) -> EvaluationWire {
        EvaluationWire {
            candidate: r.candidate_index,
            q_collision: r.q_collision.into(),
            q_seal: r.q_seal.into(),
            q_dynamics: r.q_dynamics.into(),
            q: r.q,
            spread: r.seal.as_ref().map(|s| s.spread),
            hit_count: r.seal.as_ref().map(|s| s.hit_count),
            foreign_hits: r.seal.as_ref().map(|s| s.foreign_hits),
            blocking_instance: r.collision.as_ref().and_then(|c| c.blocking_instance),
            clearance: r.collision.as_ref().map(|c| c.clearance),
            payload_force: r.wrench.as_ref().map(|w| w.payload_force),
            gravity_torque: r.wrench.as_ref().map(|w| w.gravity_torque),
            bend_angle: r.wrench.as_ref().map(|w| w.bend_angle),
            failure_reason: r.wrench.as_ref().map(|w| w.failure_reason),
        }
    }
}

/// One ranked grasp per JSON line.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankedWire {
    pub rank: usize,
    pub confidence: f64,
    pub instance_id: u32,
    pub translation: [f64; 3],
    pub rotation: [f64; 9],
    pub contact_index: usize,
}

fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for item in items {
        serde_json::to_writer(&mut w, item)
            .map_err(|e| Error::Parse(format!("jsonl encode: {e}")))?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| {
            Error::schema(format!("{}:{}", path.display(), i + 1), e.to_string())
        })?);
    }
    Ok(out)
}

pub fn write_candidates(path: &Path, records: &[CandidateRecord]) -> Result<()> {
    write_jsonl(path, records)
}

pub fn read_candidates(path: &Path) -> Result<Vec<CandidateRecord>> {
    read_jsonl(path)
}

pub fn write_evaluations(path: &Path, records: &[EvaluationWire]) -> Result<()> {
    write_jsonl(path, records)
}

pub fn read_evaluations(path: &Path) -> Result<Vec<EvaluationWire>> {
    read_jsonl(path)
}

pub fn write_ranked(path: &Path, records: &[RankedWire]) -> Result<()> {
    write_jsonl(path, records)
}

pub fn read_ranked(path: &Path) -> Result<Vec<RankedWire>> {
    read_jsonl(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;
    use nalgebra::Matrix3;

    #[test]
    fn candidate_records_roundtrip() {
        let cand = SuctionCandidate {
            pose: Pose6D::new(Matrix3::identity(), Vec3::new(0.1, -0.2, 0.3)).unwrap(),
            instance_id: 4,
            contact_index: 42,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("candidates.jsonl");
        write_candidates(&path, &records_from_candidates(&[cand])).unwrap();
        let records = read_candidates(&path).unwrap();
        let back = candidates_from_records(&records).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].instance_id, 4);
        assert_eq!(back[0].contact_index, 42);
        assert!((back[0].pose.translation - cand.pose.translation).norm() < 1e-12);
    }

    #[test]
    fn skipped_gates_serialize_as_text() {
        let wire = EvaluationWire {
            candidate: 0,
            q_collision: GateWire::Bit(0),
            q_seal: GateWire::Text(SkippedTag::Skipped),
            q_dynamics: GateWire::Text(SkippedTag::Skipped),
            q: 0,
            spread: None,
            hit_count: None,
            foreign_hits: None,
            blocking_instance: Some(3),
            clearance: Some(0.004),
            payload_force: None,
            gravity_torque: None,
            bend_angle: None,
            failure_reason: None,
        };
        let json = serde_json::to_string(&wire).unwrap();
        assert!(json.contains("\"q_seal\":\"skipped\""), "{json}");
        assert!(json.contains("\"q_collision\":0"));
        let back: EvaluationWire = serde_json::from_str(&json).unwrap();
        assert_eq!(back.q_seal.as_gate(), Gate::Skipped);
        assert_eq!(back.q_collision.as_gate(), Gate::Failed);
    }

    #[test]
    fn bad_line_reports_location() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("evals.jsonl");
        std::fs::write(&path, "{\"candidate\":0}\nnot json\n").unwrap();
        let err = read_evaluations(&path).unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("evals.jsonl:1") || msg.contains("evals.jsonl:2"), "{msg}");
    }
}
