use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::geometry::{CleanStats, Point3, TriangleMesh};
use crate::{Error, Result};

/// Loads a Wavefront OBJ mesh: `v` and `f` records, polygons fan-
/// triangulated, texture/normal indices ignored. Returns cleaning stats
/// (degenerate faces dropped).
pub fn load_obj(path: &Path) -> Result<(TriangleMesh, CleanStats)> {
    let reader = BufReader::new(File::open(path)?);
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let mut words = line.split_whitespace();
        match words.next() {
            Some("v") => {
                let mut coord = |what: &str| -> Result<f64> {
                    words
                        .next()
                        .ok_or_else(|| {
                            Error::Parse(format!("line {}: missing {what}", lineno + 1))
                        })?
                        .parse()
                        .map_err(|_| Error::Parse(format!("line {}: bad {what}", lineno + 1)))
                };
                let (x, y, z) = (coord("x")?, coord("y")?, coord("z")?);
                vertices.push(Point3::new(x, y, z));
            }
            Some("f") => {
                let mut indices = Vec::new();
                for word in words {
                    let first = word.split('/').next().unwrap_or(word);
                    let raw: i64 = first.parse().map_err(|_| {
                        Error::Parse(format!("line {}: bad face index {word:?}", lineno + 1))
                    })?;
                    let idx = if raw > 0 {
                        raw - 1
                    } else if raw < 0 {
                        vertices.len() as i64 + raw
                    } else {
                        return Err(Error::Parse(format!(
                            "line {}: zero face index",
                            lineno + 1
                        )));
                    };
                    if idx < 0 || idx as usize >= vertices.len() {
                        return Err(Error::Parse(format!(
                            "line {}: face index out of range",
                            lineno + 1
                        )));
                    }
                    indices.push(idx as u32);
                }
                if indices.len() < 3 {
                    return Err(Error::Parse(format!(
                        "line {}: face with fewer than 3 vertices",
                        lineno + 1
                    )));
                }
                for k in 1..indices.len() - 1 {
                    triangles.push([indices[0], indices[k], indices[k + 1]]);
                }
            }
            _ => {}
        }
    }
    TriangleMesh::new(vertices, triangles)
}

/// Writes a mesh as OBJ.
pub fn write_obj(path: &Path, mesh: &TriangleMesh) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for v in &mesh.vertices {
        writeln!(w, "v {} {} {}", v.x, v.y, v.z)?;
    }
    for t in &mesh.triangles {
        writeln!(w, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::box_mesh;
    use crate::geometry::Vec3;

    #[test]
    fn roundtrip_box() {
        let (mesh, _) = box_mesh(Vec3::new(0.03, 0.02, 0.01));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("box.obj");
        write_obj(&path, &mesh).unwrap();
        let (read, stats) = load_obj(&path).unwrap();
        assert_eq!(stats.degenerate_dropped, 0);
        assert_eq!(read.vertices.len(), mesh.vertices.len());
        assert_eq!(read.triangles, mesh.triangles);
        assert!((read.surface_area() - mesh.surface_area()).abs() < 1e-12);
    }

    #[test]
    fn quads_fan_triangulate_and_slashes_parse() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("quad.obj");
        std::fs::write(
            &path,
            "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1/1/1 2/2/1 3/3/1 4/4/1\n",
        )
        .unwrap();
        let (mesh, _) = load_obj(&path).unwrap();
        assert_eq!(mesh.triangles.len(), 2);
        assert!((mesh.surface_area() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn negative_indices_resolve_from_end() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("neg.obj");
        std::fs::write(&path, "v 0 0 0\nv 1 0 0\nv 0 1 0\nf -3 -2 -1\n").unwrap();
        let (mesh, _) = load_obj(&path).unwrap();
        assert_eq!(mesh.triangles, vec![[0, 1, 2]]);
    }

    #[test]
    fn out_of_range_face_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.obj");
        std::fs::write(&path, "v 0 0 0\nv 1 0 0\nf 1 2 3\n").unwrap();
        assert!(load_obj(&path).is_err());
    }
}
