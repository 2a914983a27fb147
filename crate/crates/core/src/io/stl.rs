use std::fs;
use std::path::Path;

use crate::geometry::{CleanStats, Point3, TriangleMesh};
use crate::{Error, Result};

/// Loads a binary STL mesh. Facet vertices are kept unwelded; the stored
/// facet normals are ignored (winding defines orientation).
pub fn load_stl(path: &Path) -> Result<(TriangleMesh, CleanStats)> {
    let data = fs::read(path)?;
    if data.len() < 84 {
        return Err(Error::Parse(format!(
            "{}: too short for binary stl",
            path.display()
        )));
    }
    let count = u32::from_le_bytes(data[80..84].try_into().unwrap()) as usize;
    let expected = 84 + count * 50;
    if data.len() < expected {
        if data.starts_with(b"solid") {
            return Err(Error::Parse(
                "ascii stl is not supported; export binary stl".into(),
            ));
        }
        return Err(Error::Parse(format!(
            "stl facet data truncated: {} bytes for {count} facets",
            data.len()
        )));
    }
    let mut vertices = Vec::with_capacity(count * 3);
    let mut triangles = Vec::with_capacity(count);
    for i in 0..count {
        let rec = &data[84 + i * 50..84 + (i + 1) * 50];
        // 12 bytes of facet normal first, then three vertices.
        for v in 0..3 {
            let off = 12 + v * 12;
            let x = f32::from_le_bytes(rec[off..off + 4].try_into().unwrap()) as f64;
            let y = f32::from_le_bytes(rec[off + 4..off + 8].try_into().unwrap()) as f64;
            let z = f32::from_le_bytes(rec[off + 8..off + 12].try_into().unwrap()) as f64;
            vertices.push(Point3::new(x, y, z));
        }
        let base = (i * 3) as u32;
        triangles.push([base, base + 1, base + 2]);
    }
    TriangleMesh::new(vertices, triangles)
}

/// Writes a binary STL (used by tests and fixture emission).
pub fn write_stl(path: &Path, mesh: &TriangleMesh) -> Result<()> {
    let mut out = Vec::with_capacity(84 + mesh.triangles.len() * 50);
    out.extend_from_slice(&[0u8; 80]);
    out.extend_from_slice(&(mesh.triangles.len() as u32).to_le_bytes());
    for i in 0..mesh.triangles.len() {
        let [a, b, c] = mesh.triangle_vertices(i);
        let n = (b - a).cross(&(c - a)).normalize();
        for v in [n.x, n.y, n.z] {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
        for p in [a, b, c] {
            for v in [p.x, p.y, p.z] {
                out.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
        out.extend_from_slice(&0u16.to_le_bytes());
    }
    fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::box_mesh;
    use crate::geometry::Vec3;

    #[test]
    fn roundtrip_box() {
        let (mesh, _) = box_mesh(Vec3::new(0.05, 0.04, 0.03));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("box.stl");
        write_stl(&path, &mesh).unwrap();
        let (read, stats) = load_stl(&path).unwrap();
        assert_eq!(stats.degenerate_dropped, 0);
        assert_eq!(read.triangles.len(), 12);
        assert!((read.surface_area() - mesh.surface_area()).abs() < 1e-6);
    }

    #[test]
    fn truncated_file_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trunc.stl");
        std::fs::write(&path, vec![0u8; 50]).unwrap();
        assert!(load_stl(&path).is_err());
    }

    #[test]
    fn ascii_stl_is_rejected_with_hint() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.stl");
        let mut content = b"solid thing\n".to_vec();
        content.resize(90, b' ');
        std::fs::write(&path, content).unwrap();
        let err = load_stl(&path).unwrap_err();
        assert!(format!("{err}").contains("binary"));
    }
}
