//! Single JSON pipeline configuration shared by every stage, with dotted
//! `key=value` overrides for one-off runs.

use serde::{Deserialize, Serialize};

use crate::cup::CupModel;
use crate::sampling::SamplerConfig;
use crate::seal::CollisionParams;
use crate::wrench::GateSelection;
use crate::{Error, Result};

/// Cup selection: a named preset plus field-level overrides applied on top.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct CupConfig {
    pub preset: String,
    /// Overrides any `CupModel` field, e.g. {"rest_height": 0.025}.
    pub overrides: serde_json::Map<String, serde_json::Value>,
}

impl Default for CupConfig {
    fn default() -> Self {
        CupConfig {
            preset: "cup_15mm".into(),
            overrides: serde_json::Map::new(),
        }
    }
}

impl CupConfig {
    pub fn resolve(&self) -> Result<CupModel> {
        let base = CupModel::preset(&self.preset)?;
        if self.overrides.is_empty() {
            return Ok(base);
        }
        let mut value = serde_json::to_value(base).expect("cup serializes");
        let map = value.as_object_mut().unwrap();
        for (k, v) in &self.overrides {
            map.insert(k.clone(), v.clone());
        }
        let cup: CupModel = deserialize_with_path(value, "cup")?;
        cup.validate()?;
        Ok(cup)
    }
}

/// Everything a pipeline run needs; all values have working defaults and are
/// printed by `config-dump`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub cup: CupConfig,
    pub sampler: SamplerConfig,
    pub collision: CollisionParams,
    pub gates: GateSelection,
    /// Ball radius for score-map annotation, m.
    pub annotation_radius: f64,
    /// Ball radius for the baseline affordance, m.
    pub affordance_radius: f64,
    /// Contact-to-neighbor clearance below which candidates are dropped, m.
    pub safety_margin: f64,
    /// Neighbors for normal estimation during fusion.
    pub normals_k: usize,
    /// Voxel size for multi-view dedup, m (0 disables).
    pub merge_voxel: f64,
    pub seed: u64,
    /// Worker threads; 0 picks the hardware parallelism.
    pub jobs: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            cup: CupConfig::default(),
            sampler: SamplerConfig::default(),
            collision: CollisionParams::default(),
            gates: GateSelection::All,
            annotation_radius: 0.015,
            affordance_radius: 0.015,
            safety_margin: 0.0,
            normals_k: 16,
            merge_voxel: 0.002,
            seed: 0,
            jobs: 0,
        }
    }
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<PipelineConfig> {
        let value: serde_json::Value = serde_json::from_str(text)
            .map_err(|e| Error::schema("config", e.to_string()))?;
        let config: PipelineConfig = deserialize_with_path(value, "config")?;
        config.validate()?;
        Ok(config)
    }

    /// Applies `key=value` overrides with dotted paths, e.g.
    /// `sampler.samples_per_object=200` or `cup.overrides.rest_height=0.03`.
    pub fn with_overrides(&self, sets: &[String]) -> Result<PipelineConfig> {
        if sets.is_empty() {
            return Ok(self.clone());
        }
        let mut value = serde_json::to_value(self).expect("config serializes");
        for set in sets {
            let (path, raw) = set.split_once('=').ok_or_else(|| {
                Error::invalid(format!("override {set:?} is not key=value"))
            })?;
            let parsed: serde_json::Value = serde_json::from_str(raw)
                .unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
            let mut cursor = &mut value;
            let parts: Vec<&str> = path.split('.').collect();
            for (i, part) in parts.iter().enumerate() {
                let here = parts[..i].join(".");
                let obj = cursor
                    .as_object_mut()
                    .ok_or_else(|| Error::schema(here, "cannot descend into a non-object"))?;
                if i + 1 == parts.len() {
                    obj.insert(part.to_string(), parsed.clone());
                    break;
                }
                cursor = obj
                    .entry(part.to_string())
                    .or_insert_with(|| serde_json::Value::Object(Default::default()));
            }
        }
        let config: PipelineConfig = deserialize_with_path(value, "config")?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.cup.resolve()?;
        self.sampler.validate()?;
        let positive = |v: f64, name: &str| {
            if v > 0.0 {
                Ok(())
            } else {
                Err(Error::schema(name, "must be positive".to_string()))
            }
        };
        positive(self.annotation_radius, "annotation_radius")?;
        positive(self.affordance_radius, "affordance_radius")?;
        if self.safety_margin < 0.0 {
            return Err(Error::schema("safety_margin", "must be >= 0".to_string()));
        }
        if self.merge_voxel < 0.0 {
            return Err(Error::schema("merge_voxel", "must be >= 0".to_string()));
        }
        if self.normals_k < 3 {
            return Err(Error::schema("normals_k", "must be >= 3".to_string()));
        }
        if self.collision.skin < 0.0 || self.collision.retreat <= 0.0
            || self.collision.skin.is_nan() || self.collision.retreat.is_nan() {
            return Err(Error::schema(
                "collision",
                "skin must be >= 0 and retreat > 0".to_string(),
            ));
        }
        Ok(())
    }

    pub fn to_pretty_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// Deserializes with the offending field path in the error.
fn deserialize_with_path<T: for<'de> Deserialize<'de>>(
    value: serde_json::Value,
    root: &str,
) -> Result<T> {
    let mut track = serde_path_to_error::Track::new();
    let de = serde_path_to_error::Deserializer::new(&value, &mut track);
    T::deserialize(de).map_err(|e| Error::schema(format!("{root}.{}", track.path()), e.to_string()))
}
