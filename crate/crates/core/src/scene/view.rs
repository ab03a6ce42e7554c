//! Camera selection: rejection-sample poses above the terrain, probe each
//! candidate with a coarse sphere-traced depth raster, and keep the accepted
//! candidate whose depth map varies the most.

use std::f64::consts::{PI, TAU};

use nalgebra::{Point3, Vector3};
use rand::Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use super::{SceneError, SceneGraph};
use crate::fields::Evaluator;
use crate::meshing::CameraModel;
use crate::rng::{stream, substream};
use crate::terrain::{ElementTag, TerrainElement};

const PROBE_WIDTH: u32 = 64;
const PROBE_HEIGHT: u32 = 36;
const TRACE_STEPS: u32 = 128;
const HIT_TOLERANCE: f64 = 1e-3;

/// Everything a camera candidate must satisfy, plus the intrinsics the
/// returned camera should carry.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CameraConstraints {
    /// Bounds for the camera position search, world coordinates.
    pub region: (Point3<f64>, Point3<f64>),
    /// Eye height above local ground is drawn from N(mean, sigma).
    pub height_mean: f64,
    pub height_sigma: f64,
    /// Pitch is drawn uniformly from this closed range, radians, negative down.
    pub pitch_range: (f64, f64),
    /// Candidates with any probed surface closer than this are rejected.
    pub min_distance: f64,
    /// Require at least this fraction of probe pixels to hit the given
    /// terrain element.
    pub coverage: Option<(ElementTag, f64)>,
    /// Accepted candidates to collect before picking the best.
    pub candidates: u32,
    pub attempt_budget: u32,
    /// Probe rays that travel this far count as misses.
    pub probe_far: f64,
    pub image_width: u32,
    pub image_height: u32,
    pub vfov: f64,
    pub near: f64,
}

impl CameraConstraints {
    /// Eye-level defaults: height 1.7 m ± 0.5 m, mild pitch, ten candidates.
    pub fn standard(region: (Point3<f64>, Point3<f64>)) -> Self {
        CameraConstraints {
            region,
            height_mean: 1.7,
            height_sigma: 0.5,
            pitch_range: (-0.4, 0.1),
            min_distance: 1.0,
            coverage: None,
            candidates: 10,
            attempt_budget: 1000,
            probe_far: 500.0,
            image_width: 1280,
            image_height: 720,
            vfov: 0.9,
            near: 0.05,
        }
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        let (lo, hi) = self.region;
        let finite = lo.coords.iter().chain(hi.coords.iter()).all(|v| v.is_finite());
        if !(finite && lo.x < hi.x && lo.y < hi.y && lo.z < hi.z) {
            return Err(SceneError::InvalidParams(format!(
                "camera region {lo:?}..{hi:?} must be bounded with positive extent"
            )));
        }
        if !(self.height_mean.is_finite() && self.height_sigma >= 0.0 && self.height_sigma.is_finite()) {
            return Err(SceneError::InvalidParams(format!(
                "height distribution N({}, {}) invalid",
                self.height_mean, self.height_sigma
            )));
        }
        let (p_lo, p_hi) = self.pitch_range;
        if !(p_lo <= p_hi && p_lo > -1.5 && p_hi < 1.5) {
            return Err(SceneError::InvalidParams(format!(
                "pitch range ({p_lo}, {p_hi}) must be ordered and stay short of vertical"
            )));
        }
        if !(self.min_distance >= 0.0 && self.min_distance.is_finite()) {
            return Err(SceneError::InvalidParams(format!(
                "min distance {} must be finite and non-negative",
                self.min_distance
            )));
        }
        if let Some((_, q)) = self.coverage {
            if !(0.0..=1.0).contains(&q) {
                return Err(SceneError::InvalidParams(format!(
                    "coverage fraction {q} outside [0, 1]"
                )));
            }
        }
        if self.candidates == 0 || self.attempt_budget == 0 {
            return Err(SceneError::InvalidParams(
                "candidate count and attempt budget must be at least 1".into(),
            ));
        }
        if !(self.near > 0.0 && self.probe_far > self.near && self.probe_far.is_finite()) {
            return Err(SceneError::InvalidParams(format!(
                "depth range ({}, {}) must satisfy 0 < near < far",
                self.near, self.probe_far
            )));
        }
        if !(self.vfov > 0.0 && self.vfov < PI) {
            return Err(SceneError::InvalidParams(format!(
                "vertical fov {} outside (0, pi)",
                self.vfov
            )));
        }
        if self.image_width == 0 || self.image_height == 0 {
            return Err(SceneError::InvalidParams(format!(
                "image resolution {}x{} must be at least 1x1",
                self.image_width, self.image_height
            )));
        }
        Ok(())
    }
}

fn trace_ray(
    sdf: &mut Evaluator,
    origin: Point3<f64>,
    dir: Vector3<f64>,
    far: f64,
) -> f64 {
    let mut t = 0.0;
    for _ in 0..TRACE_STEPS {
        let d = sdf.eval_scalar(origin + dir * t);
        if d < HIT_TOLERANCE {
            return t;
        }
        // The fields here are only approximately metric (noise displacement
        // shortens true distances), so step conservatively.
        t += 0.7 * d;
        if t >= far {
            return far;
        }
    }
    far
}

/// Distance along the ray through every pixel center, row-major; `far` marks
/// a miss. Rays starting inside the terrain report distance zero.
pub fn probe_depths(terrain: &TerrainElement, camera: &CameraModel, far: f64) -> Vec<f64> {
    let mut sdf = Evaluator::new(&terrain.sdf);
    let mut depths = Vec::with_capacity((camera.width * camera.height) as usize);
    for iy in 0..camera.height {
        for ix in 0..camera.width {
            let (origin, dir) = camera.pixel_ray(ix, iy);
            depths.push(trace_ray(&mut sdf, origin, dir, far));
        }
    }
    depths
}

/// Terrain height under (x, y): march down from the region top in 1 m steps
/// until the field turns solid, then bisect. Columns with no surface return
/// the region floor; columns already solid at the top return the top.
fn local_ground(terrain: &TerrainElement, x: f64, y: f64, z_floor: f64, z_top: f64) -> f64 {
    let mut sdf = Evaluator::new(&terrain.sdf);
    let mut air_z = z_top;
    if sdf.eval_scalar(Point3::new(x, y, air_z)) < 0.0 {
        return z_top;
    }
    let steps = ((z_top - z_floor).ceil() as usize).max(1);
    for i in 1..=steps {
        let z = (z_top - i as f64).max(z_floor);
        if sdf.eval_scalar(Point3::new(x, y, z)) < 0.0 {
            let (mut air, mut solid) = (air_z, z);
            for _ in 0..24 {
                let mid = 0.5 * (air + solid);
                if sdf.eval_scalar(Point3::new(x, y, mid)) < 0.0 {
                    solid = mid;
                } else {
                    air = mid;
                }
            }
            return 0.5 * (air + solid);
        }
        air_z = z;
    }
    z_floor
}

fn depth_stdev(depths: &[f64]) -> f64 {
    let n = depths.len() as f64;
    let mean = depths.iter().sum::<f64>() / n;
    (depths.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / n).sqrt()
}

fn best_index(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate().skip(1) {
        if *s > scores[best] {
            best = i;
        }
    }
    best
}

/// Pick a camera by rejection sampling. Candidates are placed uniformly in
/// the region at a Gaussian height above local ground with uniform yaw and
/// bounded pitch, then probed with a 64×36 depth raster. A candidate is
/// rejected if any probed surface is closer than the minimum distance or the
/// coverage requirement fails. Among accepted candidates the one with the
/// largest depth standard deviation wins; earlier candidates win ties.
pub fn select_camera(
    scene: &SceneGraph,
    constraints: &CameraConstraints,
    seed: u64,
) -> Result<CameraModel, SceneError> {
    constraints.validate()?;
    let (lo, hi) = constraints.region;
    let height = Normal::new(constraints.height_mean, constraints.height_sigma)
        .expect("validated sigma");
    let mut rng = stream(substream(seed, "camera"));
    let mut cameras: Vec<CameraModel> = Vec::new();
    let mut scores: Vec<f64> = Vec::new();
    let mut min_distance_rejects = 0u32;
    let mut coverage_rejects = 0u32;

    for _ in 0..constraints.attempt_budget {
        let x = rng.random_range(lo.x..hi.x);
        let y = rng.random_range(lo.y..hi.y);
        let yaw = rng.random_range(0.0..TAU);
        let pitch = rng.random_range(constraints.pitch_range.0..=constraints.pitch_range.1);
        let above: f64 = rng.sample(height);

        let eye = Point3::new(x, y, local_ground(&scene.terrain, x, y, lo.z, hi.z) + above);
        let forward =
            Vector3::new(pitch.cos() * yaw.cos(), pitch.cos() * yaw.sin(), pitch.sin());
        let pose = CameraModel::look_at(eye, eye + forward, Vector3::z())
            .expect("pitch bounded away from vertical");
        let probe = CameraModel::new(
            PROBE_WIDTH,
            PROBE_HEIGHT,
            constraints.vfov,
            pose,
            constraints.near,
            constraints.probe_far,
        )
        .expect("validated intrinsics");

        let depths = probe_depths(&scene.terrain, &probe, constraints.probe_far);
        if depths
            .iter()
            .any(|&d| d < constraints.probe_far && d < constraints.min_distance)
        {
            min_distance_rejects += 1;
            continue;
        }
        if let Some((tag, required)) = &constraints.coverage {
            let fraction = if *tag == scene.terrain.tag {
                let hits = depths.iter().filter(|&&d| d < constraints.probe_far).count();
                hits as f64 / depths.len() as f64
            } else {
                0.0
            };
            if fraction < *required {
                coverage_rejects += 1;
                continue;
            }
        }

        let camera = CameraModel::new(
            constraints.image_width,
            constraints.image_height,
            constraints.vfov,
            pose,
            constraints.near,
            constraints.probe_far,
        )
        .expect("validated intrinsics");
        scores.push(depth_stdev(&depths));
        cameras.push(camera);
        if cameras.len() >= constraints.candidates as usize {
            break;
        }
    }

    if cameras.is_empty() {
        return Err(SceneError::CameraSearch {
            attempts: constraints.attempt_budget,
            min_distance: min_distance_rejects,
            coverage: coverage_rejects,
        });
    }
    Ok(cameras.swap_remove(best_index(&scores)))
}
