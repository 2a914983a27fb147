use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::geometry::{Point3, PointCloud, UnitVec3, Vec3};
use crate::{Error, Result};

/// On-disk encoding of a PLY cloud.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlyFormat {
    Ascii,
    BinaryLittleEndian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ScalarType {
    F32,
    F64,
    U8,
    I8,
    U16,
    I16,
    U32,
    I32,
}

impl ScalarType {
    fn parse(s: &str) -> Result<ScalarType> {
        Ok(match s {
            "float" | "float32" => ScalarType::F32,
            "double" | "float64" => ScalarType::F64,
            "uchar" | "uint8" => ScalarType::U8,
            "char" | "int8" => ScalarType::I8,
            "ushort" | "uint16" => ScalarType::U16,
            "short" | "int16" => ScalarType::I16,
            "uint" | "uint32" => ScalarType::U32,
            "int" | "int32" => ScalarType::I32,
            other => return Err(Error::Parse(format!("unsupported ply type {other:?}"))),
        })
    }

    fn size(self) -> usize {
        match self {
            ScalarType::U8 | ScalarType::I8 => 1,
            ScalarType::U16 | ScalarType::I16 => 2,
            ScalarType::F32 | ScalarType::U32 | ScalarType::I32 => 4,
            ScalarType::F64 => 8,
        }
    }

    fn read_le(self, bytes: &[u8]) -> f64 {
        match self {
            ScalarType::F32 => f32::from_le_bytes(bytes[..4].try_into().unwrap()) as f64,
            ScalarType::F64 => f64::from_le_bytes(bytes[..8].try_into().unwrap()),
            ScalarType::U8 => bytes[0] as f64,
            ScalarType::I8 => bytes[0] as i8 as f64,
            ScalarType::U16 => u16::from_le_bytes(bytes[..2].try_into().unwrap()) as f64,
            ScalarType::I16 => i16::from_le_bytes(bytes[..2].try_into().unwrap()) as f64,
            ScalarType::U32 => u32::from_le_bytes(bytes[..4].try_into().unwrap()) as f64,
            ScalarType::I32 => i32::from_le_bytes(bytes[..4].try_into().unwrap()) as f64,
        }
    }
}

struct VertexLayout {
    properties: Vec<(String, ScalarType)>,
    count: usize,
}

impl VertexLayout {
    fn offset_of(&self, name: &str) -> Option<(usize, ScalarType)> {
        let mut offset = 0;
        for (pname, ptype) in &self.properties {
            if pname == name {
                return Some((offset, *ptype));
            }
            offset += ptype.size();
        }
        None
    }

    fn stride(&self) -> usize {
        self.properties.iter().map(|(_, t)| t.size()).sum()
    }

    fn column(&self, name: &str) -> Option<usize> {
        self.properties.iter().position(|(n, _)| n == name)
    }
}

/// Reads a PLY point cloud. Recognized vertex properties: x, y, z
/// (required), nx, ny, nz, instance_id, and score; anything else is skipped.
/// Returns the cloud and the per-point scores when a score property exists.
pub fn load_ply(path: &Path) -> Result<(PointCloud, Option<Vec<f64>>)> {
    let mut reader = BufReader::new(File::open(path)?);
    let mut line = String::new();
    reader.read_line(&mut line)?;
    if line.trim_end() != "ply" {
        return Err(Error::Parse(format!("{}: not a ply file", path.display())));
    }
    let mut format = None;
    let mut layout = VertexLayout {
        properties: Vec::new(),
        count: 0,
    };
    let mut in_vertex_element = false;
    let mut trailing_elements = false;
    loop {
        line.clear();
        if reader.read_line(&mut line)? == 0 {
            return Err(Error::Parse("unterminated ply header".into()));
        }
        let words: Vec<&str> = line.split_whitespace().collect();
        match words.as_slice() {
            ["comment", ..] | [] => {}
            ["format", "ascii", _] => format = Some(PlyFormat::Ascii),
            ["format", "binary_little_endian", _] => format = Some(PlyFormat::BinaryLittleEndian),
            ["format", other, _] => {
                return Err(Error::Parse(format!("unsupported ply format {other:?}")))
            }
            ["element", "vertex", n] => {
                in_vertex_element = true;
                layout.count = n
                    .parse()
                    .map_err(|_| Error::Parse("bad vertex count".into()))?;
            }
            ["element", ..] => {
                in_vertex_element = false;
                trailing_elements = true;
            }
            ["property", "list", ..] => {
                if in_vertex_element {
                    return Err(Error::Parse("list properties on vertices unsupported".into()));
                }
            }
            ["property", ptype, name] => {
                if in_vertex_element {
                    layout
                        .properties
                        .push((name.to_string(), ScalarType::parse(ptype)?));
                }
            }
            ["end_header"] => break,
            other => return Err(Error::Parse(format!("bad ply header line {other:?}"))),
        }
    }
    let format = format.ok_or_else(|| Error::Parse("ply header missing format".into()))?;
    for axis in ["x", "y", "z"] {
        if layout.column(axis).is_none() {
            return Err(Error::Parse(format!("ply vertices missing {axis}")));
        }
    }
    let has_normals = ["nx", "ny", "nz"].iter().all(|n| layout.column(n).is_some());
    let has_labels = layout.column("instance_id").is_some();
    let has_score = layout.column("score").is_some();

    let mut points = Vec::with_capacity(layout.count);
    let mut normals = has_normals.then(|| Vec::with_capacity(layout.count));
    let mut labels = has_labels.then(|| Vec::with_capacity(layout.count));
    let mut scores = has_score.then(|| Vec::with_capacity(layout.count));

    match format {
        PlyFormat::Ascii => {
            let col = |name: &str| layout.column(name).unwrap();
            let (cx, cy, cz) = (col("x"), col("y"), col("z"));
            for _ in 0..layout.count {
                line.clear();
                if reader.read_line(&mut line)? == 0 {
                    return Err(Error::Parse("ply vertex data truncated".into()));
                }
                let vals: Vec<f64> = line
                    .split_whitespace()
                    .map(|w| w.parse().map_err(|_| Error::Parse("bad ply value".into())))
                    .collect::<Result<_>>()?;
                if vals.len() != layout.properties.len() {
                    return Err(Error::Parse("ply vertex arity mismatch".into()));
                }
                points.push(Point3::new(vals[cx], vals[cy], vals[cz]));
                if let Some(ns) = &mut normals {
                    ns.push(UnitVec3::new_normalize(Vec3::new(
                        vals[col("nx")],
                        vals[col("ny")],
                        vals[col("nz")],
                    )));
                }
                if let Some(ls) = &mut labels {
                    ls.push(vals[col("instance_id")] as u32);
                }
                if let Some(ss) = &mut scores {
                    ss.push(vals[col("score")]);
                }
            }
        }
        PlyFormat::BinaryLittleEndian => {
            let stride = layout.stride();
            let mut buf = vec![0u8; stride * layout.count];
            reader.read_exact(&mut buf).map_err(|_| {
                Error::Parse("ply binary vertex data truncated".into())
            })?;
            let field = |name: &str| layout.offset_of(name).unwrap();
            let (fx, fy, fz) = (field("x"), field("y"), field("z"));
            for i in 0..layout.count {
                let rec = &buf[i * stride..(i + 1) * stride];
                let get = |(off, t): (usize, ScalarType)| t.read_le(&rec[off..]);
                points.push(Point3::new(get(fx), get(fy), get(fz)));
                if let Some(ns) = &mut normals {
                    ns.push(UnitVec3::new_normalize(Vec3::new(
                        get(field("nx")),
                        get(field("ny")),
                        get(field("nz")),
                    )));
                }
                if let Some(ls) = &mut labels {
                    ls.push(get(field("instance_id")) as u32);
                }
                if let Some(ss) = &mut scores {
                    ss.push(get(field("score")));
                }
            }
        }
    }
    let _ = trailing_elements; // faces and other elements are ignored
    Ok((PointCloud::new(points, normals, labels)?, scores))
}

/// Writes a PLY point cloud with double-precision coordinates. Normals and
/// instance labels are written when present; `scores` adds a float score
/// property.
pub fn write_ply(
    path: &Path,
    cloud: &PointCloud,
    scores: Option<&[f64]>,
    format: PlyFormat,
) -> Result<()> {
    if let Some(s) = scores {
        if s.len() != cloud.len() {
            return Err(Error::DimensionMismatch(
                "scores do not match cloud length".into(),
            ));
        }
    }
    let mut w = BufWriter::new(File::create(path)?);
    let fmt = match format {
        PlyFormat::Ascii => "ascii",
        PlyFormat::BinaryLittleEndian => "binary_little_endian",
    };
    write!(w, "ply\nformat {fmt} 1.0\nelement vertex {}\n", cloud.len())?;
    write!(w, "property double x\nproperty double y\nproperty double z\n")?;
    if cloud.normals.is_some() {
        write!(w, "property double nx\nproperty double ny\nproperty double nz\n")?;
    }
    if cloud.instance_labels.is_some() {
        writeln!(w, "property uint instance_id")?;
    }
    if scores.is_some() {
        writeln!(w, "property float score")?;
    }
    writeln!(w, "end_header")?;
    for i in 0..cloud.len() {
        let p = cloud.points[i];
        match format {
            PlyFormat::Ascii => {
                write!(w, "{} {} {}", p.x, p.y, p.z)?;
                if let Some(ns) = &cloud.normals {
                    let n = ns[i];
                    write!(w, " {} {} {}", n.x, n.y, n.z)?;
                }
                if let Some(ls) = &cloud.instance_labels {
                    write!(w, " {}", ls[i])?;
                }
                if let Some(ss) = scores {
                    write!(w, " {}", ss[i] as f32)?;
                }
                writeln!(w)?;
            }
            PlyFormat::BinaryLittleEndian => {
                for v in [p.x, p.y, p.z] {
                    w.write_all(&v.to_le_bytes())?;
                }
                if let Some(ns) = &cloud.normals {
                    let n = ns[i];
                    for v in [n.x, n.y, n.z] {
                        w.write_all(&v.to_le_bytes())?;
                    }
                }
                if let Some(ls) = &cloud.instance_labels {
                    w.write_all(&ls[i].to_le_bytes())?;
                }
                if let Some(ss) = scores {
                    w.write_all(&(ss[i] as f32).to_le_bytes())?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_cloud() -> PointCloud {
        PointCloud::new(
            vec![
                Point3::new(0.0, 0.5, -1.25),
                Point3::new(1e-4, 2.0, 3.5),
                Point3::new(-7.0, 0.25, 0.125),
            ],
            Some(vec![
                UnitVec3::new_normalize(Vec3::z()),
                UnitVec3::new_normalize(Vec3::new(1.0, 1.0, 0.0)),
                UnitVec3::new_normalize(-Vec3::x()),
            ]),
            Some(vec![0, 3, 17]),
        )
        .unwrap()
    }

    #[test]
    fn roundtrip_both_formats() {
        let cloud = sample_cloud();
        let scores = vec![0.0, 0.5, 1.0];
        let dir = tempfile::tempdir().unwrap();
        for (fname, format) in [
            ("a.ply", PlyFormat::Ascii),
            ("b.ply", PlyFormat::BinaryLittleEndian),
        ] {
            let path = dir.path().join(fname);
            write_ply(&path, &cloud, Some(&scores), format).unwrap();
            let (read, read_scores) = load_ply(&path).unwrap();
            assert_eq!(read.len(), cloud.len());
            for (a, b) in read.points.iter().zip(&cloud.points) {
                assert!((a - b).norm() < 1e-12);
            }
            for (a, b) in read
                .normals
                .as_ref()
                .unwrap()
                .iter()
                .zip(cloud.normals.as_ref().unwrap())
            {
                assert!((a.into_inner() - b.into_inner()).norm() < 1e-12);
            }
            assert_eq!(read.instance_labels, cloud.instance_labels);
            let rs = read_scores.unwrap();
            for (a, b) in rs.iter().zip(&scores) {
                assert!((a - b).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn reads_float32_ascii_from_other_tools() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ext.ply");
        std::fs::write(
            &path,
            "ply\nformat ascii 1.0\ncomment made elsewhere\nelement vertex 2\n\
             property float x\nproperty float y\nproperty float z\n\
             property uchar red\nend_header\n1 2 3 255\n4 5 6 0\n",
        )
        .unwrap();
        let (cloud, scores) = load_ply(&path).unwrap();
        assert_eq!(cloud.len(), 2);
        assert!(scores.is_none());
        assert!(cloud.normals.is_none());
        assert!((cloud.points[1] - Point3::new(4.0, 5.0, 6.0)).norm() < 1e-12);
    }

    #[test]
    fn rejects_missing_coordinates() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.ply");
        std::fs::write(
            &path,
            "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\n\
             property float y\nend_header\n1 2\n",
        )
        .unwrap();
        assert!(load_ply(&path).is_err());
    }
}
