use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::geometry::{Pose6D, SceneModel, SceneObject};
use crate::io::{load_obj, load_stl, write_obj};
use crate::{Error, Result};

/// `scene.json` schema: posed objects with mesh paths relative to the scene
/// file, plus the ground-plane flag.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneFile {
    pub objects: Vec<SceneObjectFile>,
    pub ground_plane: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneObjectFile {
    pub id: u32,
    pub mesh_path: String,
    pub pose: PoseFile,
    pub mass_kg: f64,
    pub friction: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PoseFile {
    /// Row-major 3x3 rotation.
    pub rotation: [f64; 9],
    pub translation: [f64; 3],
}

impl From<&Pose6D> for PoseFile {
    fn from(pose: &Pose6D) -> Self {
        PoseFile {
            rotation: pose.rotation_row_major(),
            translation: [
                pose.translation.x,
                pose.translation.y,
                pose.translation.z,
            ],
        }
    }
}

/// Loads a scene description and its meshes (OBJ or binary STL by
/// extension). Schema violations name the offending field.
pub fn load_scene(path: &Path) -> Result<SceneModel> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::schema(path.display().to_string(), e.to_string()))?;
    let file: SceneFile = serde_json::from_str(&text)
        .map_err(|e| Error::schema(path.display().to_string(), e.to_string()))?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut objects = Vec::with_capacity(file.objects.len());
    for (i, entry) in file.objects.iter().enumerate() {
        let field = |name: &str| format!("{}: objects[{i}].{name}", path.display());
        let mesh_path = dir.join(&entry.mesh_path);
        let ext = mesh_path
            .extension()
            .and_then(|e| e.to_str())
            .unwrap_or("")
            .to_ascii_lowercase();
        let (mesh, _) = match ext.as_str() {
            "obj" => load_obj(&mesh_path)
                .map_err(|e| Error::schema(field("mesh_path"), e.to_string()))?,
            "stl" => load_stl(&mesh_path)
                .map_err(|e| Error::schema(field("mesh_path"), e.to_string()))?,
            other => {
                return Err(Error::schema(
                    field("mesh_path"),
                    format!("unsupported mesh extension {other:?}"),
                ))
            }
        };
        let pose = Pose6D::from_row_major(&entry.pose.rotation, &entry.pose.translation)
            .map_err(|e| Error::schema(field("pose"), e.to_string()))?;
        objects.push(SceneObject {
            instance_id: entry.id,
            mesh,
            pose,
            mass_kg: entry.mass_kg,
            friction: entry.friction,
        });
    }
    SceneModel::new(objects, file.ground_plane)
        .map_err(|e| Error::schema(format!("{}: objects", path.display()), e.to_string()))
}

/// Writes a scene: one OBJ per object next to the json, then the scene file
/// itself.
pub fn write_scene(path: &Path, scene: &SceneModel) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut entries = Vec::with_capacity(scene.objects.len());
    for obj in &scene.objects {
        let mesh_name = format!("object_{:03}.obj", obj.instance_id);
        write_obj(&dir.join(&mesh_name), &obj.mesh)?;
        entries.push(SceneObjectFile {
            id: obj.instance_id,
            mesh_path: mesh_name,
            pose: PoseFile::from(&obj.pose),
            mass_kg: obj.mass_kg,
            friction: obj.friction,
        });
    }
    let file = SceneFile {
        objects: entries,
        ground_plane: scene.ground_plane,
    };
    fs::write(
        path,
        serde_json::to_string_pretty(&file).expect("scene file serializes"),
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::make_demo_scene;

    #[test]
    fn roundtrip_demo_scene() {
        let scene = make_demo_scene();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scene.json");
        write_scene(&path, &scene).unwrap();
        let read = load_scene(&path).unwrap();
        assert_eq!(read.objects.len(), scene.objects.len());
        assert_eq!(read.ground_plane, scene.ground_plane);
        for (a, b) in read.objects.iter().zip(&scene.objects) {
            assert_eq!(a.instance_id, b.instance_id);
            assert_eq!(a.mesh.triangles.len(), b.mesh.triangles.len());
            assert!((a.mass_kg - b.mass_kg).abs() < 1e-12);
            assert!((a.pose.translation - b.pose.translation).norm() < 1e-12);
        }
    }

    #[test]
    fn schema_violation_names_the_field() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scene.json");
        std::fs::write(
            &path,
            r#"{"objects":[{"id":1,"mesh_path":"missing.obj",
                "pose":{"rotation":[1,0,0,0,1,0,0,0,1],"translation":[0,0,0]},
                "mass_kg":1.0,"friction":0.5}],"ground_plane":true}"#,
        )
        .unwrap();
        let err = load_scene(&path).unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("objects[0].mesh_path"), "{msg}");
    }

    #[test]
    fn bad_rotation_is_a_schema_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scene.json");
        let (mesh, _) = crate::fixtures::box_mesh(crate::geometry::Vec3::new(0.01, 0.01, 0.01));
        write_obj(&dir.path().join("m.obj"), &mesh).unwrap();
        std::fs::write(
            &path,
            r#"{"objects":[{"id":1,"mesh_path":"m.obj",
                "pose":{"rotation":[2,0,0,0,1,0,0,0,1],"translation":[0,0,0]},
                "mass_kg":1.0,"friction":0.5}],"ground_plane":false}"#,
        )
        .unwrap();
        let err = load_scene(&path).unwrap_err();
        assert!(format!("{err}").contains("pose"));
    }
}
