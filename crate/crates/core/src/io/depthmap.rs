use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::geometry::{CameraIntrinsics, DepthImage, Pose6D};
use crate::{Error, Result};

/// JSON sidecar carried next to every depth file: intrinsics, the
/// camera-to-world extrinsic, and an optional instance-label map path
/// (16-bit PGM of instance ids, relative to the sidecar).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DepthSidecar {
    pub intrinsics: CameraIntrinsics,
    /// Row-major 3x3 rotation.
    pub rotation: [f64; 9],
    pub translation: [f64; 3],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub labels: Option<String>,
}

/// One loaded view: metric depth, camera model, pose, optional labels.
#[derive(Debug, Clone)]
pub struct DepthView {
    pub depth: DepthImage,
    pub intrinsics: CameraIntrinsics,
    pub extrinsic: Pose6D,
    pub labels: Option<Vec<u32>>,
}

fn sidecar_path(depth_path: &Path) -> PathBuf {
    depth_path.with_extension("json")
}

/// Loads a depth view given the depth file path. `.pgm` files hold 16-bit
/// millimeters; `.f32` files hold raw little-endian f32 meters. The sidecar
/// `<stem>.json` must exist.
pub fn load_depth_view(depth_path: &Path) -> Result<DepthView> {
    let sidecar = sidecar_path(depth_path);
    if !sidecar.exists() {
        return Err(Error::Schema {
            path: sidecar.display().to_string(),
            message: "intrinsics not found (missing depth sidecar)".into(),
        });
    }
    let meta: DepthSidecar = serde_json::from_str(&fs::read_to_string(&sidecar)?)
        .map_err(|e| Error::schema(sidecar.display().to_string(), e.to_string()))?;
    meta.intrinsics.validate()?;
    let extrinsic = Pose6D::from_row_major(&meta.rotation, &meta.translation)?;
    let (w, h) = (meta.intrinsics.width, meta.intrinsics.height);

    let ext = depth_path
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or("");
    let depth = match ext {
        "pgm" => {
            let (data, pw, ph) = read_pgm16(depth_path)?;
            if (pw, ph) != (w, h) {
                return Err(Error::DimensionMismatch(format!(
                    "depth {pw}x{ph} vs intrinsics {w}x{h}"
                )));
            }
            DepthImage::new(w, h, data.iter().map(|&mm| mm as f64 / 1000.0).collect())?
        }
        "f32" => {
            let bytes = fs::read(depth_path)?;
            if bytes.len() != w * h * 4 {
                return Err(Error::DimensionMismatch(format!(
                    "{} bytes of f32 depth for {w}x{h}",
                    bytes.len()
                )));
            }
            let data = bytes
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
                .collect();
            DepthImage::new(w, h, data)?
        }
        other => {
            return Err(Error::Parse(format!(
                "unsupported depth extension {other:?} (expected pgm or f32)"
            )))
        }
    };

    let labels = match &meta.labels {
        Some(rel) => {
            let lpath = sidecar.parent().unwrap_or(Path::new(".")).join(rel);
            let (data, pw, ph) = read_pgm16(&lpath)?;
            if (pw, ph) != (w, h) {
                return Err(Error::DimensionMismatch(
                    "label map does not match depth size".into(),
                ));
            }
            Some(data.iter().map(|&v| v as u32).collect())
        }
        None => None,
    };
    Ok(DepthView {
        depth,
        intrinsics: meta.intrinsics,
        extrinsic,
        labels,
    })
}

/// Writes a depth view: 16-bit millimeter PGM (values round to the nearest
/// millimeter, clamped to u16), optional label PGM, and the JSON sidecar.
pub fn write_depth_view(
    depth_path: &Path,
    depth: &DepthImage,
    intrinsics: &CameraIntrinsics,
    extrinsic: &Pose6D,
    labels: Option<&[u32]>,
) -> Result<()> {
    let mm: Vec<u16> = depth
        .data
        .iter()
        .map(|&m| (m * 1000.0).round().clamp(0.0, 65535.0) as u16)
        .collect();
    write_pgm16(depth_path, &mm, depth.width, depth.height)?;
    let labels_name = match labels {
        Some(ls) => {
            if ls.len() != depth.data.len() {
                return Err(Error::DimensionMismatch(
                    "label map does not match depth size".into(),
                ));
            }
            let stem = depth_path
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("depth");
            let name = format!("{stem}_labels.pgm");
            let lpath = depth_path.parent().unwrap_or(Path::new(".")).join(&name);
            let as16: Vec<u16> = ls
                .iter()
                .map(|&v| u16::try_from(v).unwrap_or(u16::MAX))
                .collect();
            write_pgm16(&lpath, &as16, depth.width, depth.height)?;
            Some(name)
        }
        None => None,
    };
    let meta = DepthSidecar {
        intrinsics: *intrinsics,
        rotation: extrinsic.rotation_row_major(),
        translation: [
            extrinsic.translation.x,
            extrinsic.translation.y,
            extrinsic.translation.z,
        ],
        labels: labels_name,
    };
    fs::write(
        sidecar_path(depth_path),
        serde_json::to_string_pretty(&meta).expect("sidecar serializes"),
    )?;
    Ok(())
}

/// 16-bit big-endian PGM (P5, maxval 65535) as the format specifies.
fn read_pgm16(path: &Path) -> Result<(Vec<u16>, usize, usize)> {
    let data = fs::read(path)?;
    let mut pos = 0usize;
    let mut token = || -> Result<String> {
        // Skip whitespace and '#' comments.
        loop {
            while pos < data.len() && data[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < data.len() && data[pos] == b'#' {
                while pos < data.len() && data[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < data.len() && !data[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Parse(format!("{}: truncated pgm", path.display())));
        }
        Ok(String::from_utf8_lossy(&data[start..pos]).into_owned())
    };
    if token()? != "P5" {
        return Err(Error::Parse(format!("{}: not a P5 pgm", path.display())));
    }
    let w: usize = token()?.parse().map_err(|_| Error::Parse("bad pgm width".into()))?;
    let h: usize = token()?.parse().map_err(|_| Error::Parse("bad pgm height".into()))?;
    let maxval: usize = token()?
        .parse()
        .map_err(|_| Error::Parse("bad pgm maxval".into()))?;
    pos += 1; // single whitespace after maxval
    let mut out = Vec::with_capacity(w * h);
    if maxval > 255 {
        if data.len() < pos + 2 * w * h {
            return Err(Error::Parse("pgm pixel data truncated".into()));
        }
        for i in 0..w * h {
            out.push(u16::from_be_bytes([data[pos + 2 * i], data[pos + 2 * i + 1]]));
        }
    } else {
        if data.len() < pos + w * h {
            return Err(Error::Parse("pgm pixel data truncated".into()));
        }
        for i in 0..w * h {
            out.push(data[pos + i] as u16);
        }
    }
    Ok((out, w, h))
}

fn write_pgm16(path: &Path, values: &[u16], w: usize, h: usize) -> Result<()> {
    if values.len() != w * h {
        return Err(Error::DimensionMismatch("pgm size mismatch".into()));
    }
    let mut out = format!("P5\n{w} {h}\n65535\n").into_bytes();
    out.reserve(2 * values.len());
    for v in values {
        out.extend_from_slice(&v.to_be_bytes());
    }
    fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn intr() -> CameraIntrinsics {
        CameraIntrinsics {
            fx: 100.0,
            fy: 100.0,
            cx: 2.0,
            cy: 1.0,
            width: 4,
            height: 3,
        }
    }

    #[test]
    fn roundtrip_pgm_with_labels() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("view_000.pgm");
        let depth = DepthImage::new(
            4,
            3,
            vec![0.0, 0.5, 1.0, 1.5, 0.001, 2.0, 0.0, 0.25, 3.0, 0.75, 1.25, 0.0],
        )
        .unwrap();
        let labels: Vec<u32> = (0..12).collect();
        write_depth_view(&path, &depth, &intr(), &Pose6D::identity(), Some(&labels)).unwrap();
        let view = load_depth_view(&path).unwrap();
        assert_eq!(view.intrinsics, intr());
        assert_eq!(view.labels.as_deref(), Some(&labels[..]));
        for (a, b) in view.depth.data.iter().zip(&depth.data) {
            assert!((a - b).abs() < 5e-4, "{a} vs {b}"); // millimeter rounding
        }
    }

    #[test]
    fn f32_raw_depth_loads_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("view_001.f32");
        let depth: Vec<f64> = vec![0.0, 0.12345, 2.5, 0.9999, 1.0, 0.0, 0.5, 0.25, 3.0, 1.5, 0.75, 0.125];
        let bytes: Vec<u8> = depth
            .iter()
            .flat_map(|&d| (d as f32).to_le_bytes())
            .collect();
        std::fs::write(&path, bytes).unwrap();
        let meta = DepthSidecar {
            intrinsics: intr(),
            rotation: Pose6D::identity().rotation_row_major(),
            translation: [0.0; 3],
            labels: None,
        };
        std::fs::write(
            path.with_extension("json"),
            serde_json::to_string(&meta).unwrap(),
        )
        .unwrap();
        let view = load_depth_view(&path).unwrap();
        for (a, b) in view.depth.data.iter().zip(&depth) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn missing_sidecar_names_intrinsics() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("orphan.pgm");
        std::fs::write(&path, b"P5\n1 1\n65535\n\x00\x00").unwrap();
        let err = load_depth_view(&path).unwrap_err();
        assert!(format!("{err}").contains("intrinsics not found"), "{err}");
    }
}
