//! Scene composition: scattering asset placeholders over terrain surfaces and
//! selecting cameras that satisfy distance and coverage constraints.
//!
//! A scene is assembled in stages: terrain first, then placeholder transforms
//! for assets (meshes come later), then cameras. Each stage is deterministic
//! in the scene seed, so a scene file can be regenerated from its seed alone.

pub mod place;
pub mod view;

pub use place::{place_assets, sample_ground_points, AssetChoice, PlacementRule};
pub use view::{probe_depths, select_camera, CameraConstraints};

use nalgebra::Isometry3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::meshing::CameraModel;
use crate::terrain::TerrainElement;

fn dominant_rejection(min_distance: u32, coverage: u32) -> &'static str {
    if coverage > min_distance {
        "coverage"
    } else {
        "min-distance"
    }
}

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("invalid scene parameters: {0}")]
    InvalidParams(String),
    #[error(
        "camera search exhausted {attempts} attempts; dominant cause: {} \
         ({min_distance} min-distance, {coverage} coverage rejections)",
        dominant_rejection(*.min_distance, *.coverage)
    )]
    CameraSearch { attempts: u32, min_distance: u32, coverage: u32 },
}

/// Where an asset will be instantiated, before any mesh exists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Placeholder {
    pub kind: String,
    /// Seed for the asset generator that will fill this slot.
    pub seed: u64,
    pub transform: Isometry3<f64>,
    /// Clearance radius in meters, used for spacing and collision checks.
    pub footprint_radius: f64,
    pub tags: Vec<String>,
}

/// A composed scene: terrain, asset placeholders, and cameras.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneGraph {
    pub terrain: TerrainElement,
    pub placeholders: Vec<Placeholder>,
    pub cameras: Vec<CameraModel>,
    pub seed: u64,
}

impl SceneGraph {
    pub fn new(terrain: TerrainElement, seed: u64) -> Self {
        SceneGraph { terrain, placeholders: Vec::new(), cameras: Vec::new(), seed }
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        for (i, ph) in self.placeholders.iter().enumerate() {
            let t = ph.transform.translation.vector;
            let q = ph.transform.rotation.coords;
            if !(t.iter().all(|v| v.is_finite()) && q.iter().all(|v| v.is_finite())) {
                return Err(SceneError::InvalidParams(format!(
                    "placeholder {i} ({}) has a non-finite transform",
                    ph.kind
                )));
            }
            if !(ph.footprint_radius > 0.0 && ph.footprint_radius.is_finite()) {
                return Err(SceneError::InvalidParams(format!(
                    "placeholder {i} ({}) footprint radius {} must be positive",
                    ph.kind, ph.footprint_radius
                )));
            }
        }
        Ok(())
    }
}

/// Split one camera into a rectified stereo pair separated by `baseline`
/// meters along the camera x-axis. A zero baseline returns two copies of the
/// input, which keeps monocular pipelines and stereo pipelines interchangeable.
pub fn make_stereo_rig(
    camera: &CameraModel,
    baseline: f64,
) -> Result<(CameraModel, CameraModel), SceneError> {
    if !(baseline >= 0.0 && baseline.is_finite()) {
        return Err(SceneError::InvalidParams(format!(
            "stereo baseline {baseline} must be finite and non-negative"
        )));
    }
    if baseline == 0.0 {
        return Ok((camera.clone(), camera.clone()));
    }
    let mut left = camera.clone();
    let mut right = camera.clone();
    left.baseline = Some(baseline);
    right.baseline = Some(baseline);
    // Shifting the camera center by +baseline along the camera x-axis in
    // world space subtracts the same amount from the world→camera translation,
    // which is expressed in camera coordinates.
    right.pose.translation.vector.x -= baseline;
    Ok((left, right))
}
