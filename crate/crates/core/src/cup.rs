//! Parametric bellows suction cup: concentric vertex rings used as ray
//! origins for seal evaluation, plus the physical limits consumed by the
//! wrench gate.

use serde::{Deserialize, Serialize};

use crate::geometry::{Point3, Pose6D, UnitVec3};
use crate::{Error, Result};

/// Suction cup discretization and limits. Defaults give 15 rings x 64
/// vertices = 960 ray origins and a 10% deformation threshold.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CupModel {
    /// Pad radius, m.
    pub radius: f64,
    /// Uncompressed bellows height, m. Seal thresholds derive from it.
    pub rest_height: f64,
    pub num_rings: usize,
    pub verts_per_ring: usize,
    /// Fraction of `rest_height` tolerated as hit-distance spread.
    pub deformation_threshold: f64,
    /// Max payload force before the vacuum joint breaks, N.
    pub force_limit: f64,
    /// Max gravity torque about the contact, N*m.
    pub torque_limit: f64,
    /// Max angle between approach axis and vertical, rad.
    pub max_bend_angle: f64,
}

impl CupModel {
    /// Named presets: `cup_15mm` (20 N) and `cup_25mm` (30 N).
    pub fn preset(name: &str) -> Result<CupModel> {
        match name {
            "cup_15mm" => Ok(CupModel {
                radius: 0.015,
                rest_height: 0.020,
                force_limit: 20.0,
                ..CupModel::base()
            }),
            "cup_25mm" => Ok(CupModel {
                radius: 0.025,
                rest_height: 0.030,
                force_limit: 30.0,
                ..CupModel::base()
            }),
            other => Err(Error::UnknownPreset(other.to_string())),
        }
    }

    fn base() -> CupModel {
        CupModel {
            radius: 0.015,
            rest_height: 0.020,
            num_rings: 15,
            verts_per_ring: 64,
            deformation_threshold: 0.10,
            force_limit: 20.0,
            torque_limit: 0.3,
            max_bend_angle: 30f64.to_radians(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.radius <= 0.0 || self.rest_height <= 0.0 || self.radius.is_nan() || self.rest_height.is_nan() {
            return Err(Error::invalid("cup radius and rest height must be positive"));
        }
        if self.num_rings == 0 || self.verts_per_ring == 0 {
            return Err(Error::invalid("cup needs at least one ring and vertex"));
        }
        if !(self.deformation_threshold > 0.0 && self.deformation_threshold < 1.0) {
            return Err(Error::invalid("deformation threshold must be in (0,1)"));
        }
        if self.force_limit <= 0.0 || self.force_limit.is_nan() {
            return Err(Error::invalid("force limit must be positive"));
        }
        Ok(())
    }

    pub fn vertex_count(&self) -> usize {
        self.num_rings * self.verts_per_ring
    }

    /// Allowed hit-distance spread, m.
    pub fn spread_limit(&self) -> f64 {
        self.deformation_threshold * self.rest_height
    }

    /// Ray origins and the shared direction for a cup at `pose`.
    ///
    /// The pose's x-axis is the approach axis and points into the surface;
    /// the contact point is the pose translation. Ring k of `num_rings` has
    /// radius `radius * k / num_rings`; vertex j sits at angle
    /// `2*pi*j / verts_per_ring` in the local y-z plane, stood off
    /// `rest_height` along local -x so each ray measures the free travel to
    /// contact.
    pub fn cup_rays(&self, pose: &Pose6D) -> CupRays {
        let dir = UnitVec3::new_normalize(pose.rotation.column(0).into_owned());
        let mut origins = Vec::with_capacity(self.vertex_count());
        for ring in 1..=self.num_rings {
            let r = self.radius * ring as f64 / self.num_rings as f64;
            for j in 0..self.verts_per_ring {
                let theta = std::f64::consts::TAU * j as f64 / self.verts_per_ring as f64;
                let local = Point3::new(-self.rest_height, r * theta.cos(), r * theta.sin());
                origins.push(pose.transform_point(&local));
            }
        }
        CupRays {
            origins,
            direction: dir,
        }
    }

    /// The 8 equally spaced outer-ring vertices used by the coarse
    /// perimeter-only seal model.
    pub fn perimeter_rays(&self, pose: &Pose6D) -> CupRays {
        let dir = UnitVec3::new_normalize(pose.rotation.column(0).into_owned());
        let mut origins = Vec::with_capacity(8);
        for j in 0..8 {
            let theta = std::f64::consts::TAU * j as f64 / 8.0;
            let local = Point3::new(
                -self.rest_height,
                self.radius * theta.cos(),
                self.radius * theta.sin(),
            );
            origins.push(pose.transform_point(&local));
        }
        CupRays {
            origins,
            direction: dir,
        }
    }
}

/// Ray bundle cast by a posed cup: per-vertex origins, one shared direction.
#[derive(Debug, Clone)]
pub struct CupRays {
    pub origins: Vec<Point3>,
    pub direction: UnitVec3,
}
