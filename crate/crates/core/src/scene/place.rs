//! Surface scattering: dart-throwing with a hard minimum spacing, masked by a
//! field program and a slope gate, followed by asset assignment with
//! surface-aligned orientations.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};

use nalgebra::{Isometry3, Point3, Translation3, UnitQuaternion, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Placeholder, SceneError};
use crate::fields::{Evaluator, FieldProgram, ValueType};
use crate::meshing::marching_cubes_uniform;
use crate::rng::{stream, substream, substream_index};
use crate::terrain::TerrainElement;

/// How densely and where placeholders may land on a surface.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlacementRule {
    /// Target points per square meter of surface.
    pub density: f64,
    /// Acceptance probability in [0, 1], evaluated at each candidate point.
    pub mask: FieldProgram,
    /// Maximum slope in radians; faces steeper than this never receive points.
    pub normal_threshold: f64,
    /// Hard lower bound on the distance between any two accepted points.
    pub min_spacing: f64,
}

impl PlacementRule {
    pub fn validate(&self) -> Result<(), SceneError> {
        if !(self.density >= 0.0 && self.density.is_finite()) {
            return Err(SceneError::InvalidParams(format!(
                "placement density {} must be finite and non-negative",
                self.density
            )));
        }
        if !(self.min_spacing > 0.0 && self.min_spacing.is_finite()) {
            return Err(SceneError::InvalidParams(format!(
                "min spacing {} must be positive",
                self.min_spacing
            )));
        }
        if !(0.0..=PI / 2.0).contains(&self.normal_threshold) {
            return Err(SceneError::InvalidParams(format!(
                "normal threshold {} outside [0, pi/2]",
                self.normal_threshold
            )));
        }
        if self.mask.output_type() != ValueType::Scalar {
            return Err(SceneError::InvalidParams("placement mask must be scalar".into()));
        }
        Ok(())
    }
}

fn grid_key(p: Point3<f64>, cell: f64) -> (i64, i64, i64) {
    (
        (p.x / cell).floor() as i64,
        (p.y / cell).floor() as i64,
        (p.z / cell).floor() as i64,
    )
}

/// Scatter points over the terrain surface inside `region` by dart-throwing
/// on a 1 m marching-cubes approximation of the surface. Accepted points are
/// pairwise at least `min_spacing` apart, lie on faces no steeper than the
/// normal threshold, and pass a Bernoulli trial against the mask value.
///
/// Throwing stops once ceil(density × surface area) points are accepted or
/// the attempt budget (30 darts per target point) runs out, so sparse results
/// are possible and an empty result is not an error.
pub fn sample_ground_points(
    terrain: &TerrainElement,
    region: (Point3<f64>, Point3<f64>),
    rule: &PlacementRule,
    seed: u64,
) -> Result<Vec<(Point3<f64>, Vector3<f64>)>, SceneError> {
    rule.validate()?;
    let (lo, hi) = region;
    let extent = hi - lo;
    if !(extent.iter().all(|e| e.is_finite() && *e > 0.0)
        && lo.coords.iter().all(|v| v.is_finite()))
    {
        return Err(SceneError::InvalidParams(format!(
            "placement region {lo:?}..{hi:?} must be bounded with positive extent"
        )));
    }

    let cells = [
        (extent.x.ceil() as usize).max(1),
        (extent.y.ceil() as usize).max(1),
        (extent.z.ceil() as usize).max(1),
    ];
    let mesh = marching_cubes_uniform(&terrain.sdf, lo, hi, cells)
        .map_err(|e| SceneError::InvalidParams(e.to_string()))?;
    if mesh.faces.is_empty() {
        return Ok(Vec::new());
    }

    let mut cumulative_area = Vec::with_capacity(mesh.faces.len());
    let mut total_area = 0.0;
    for f in 0..mesh.faces.len() {
        total_area += mesh.face_area(f);
        cumulative_area.push(total_area);
    }
    if total_area <= 0.0 {
        return Ok(Vec::new());
    }
    let target = (rule.density * total_area).ceil() as usize;
    if target == 0 {
        return Ok(Vec::new());
    }

    let cos_limit = rule.normal_threshold.cos();
    let spacing_sq = rule.min_spacing * rule.min_spacing;
    let mut mask = Evaluator::new(&rule.mask);
    let mut rng = stream(substream(seed, "ground points"));
    let mut points: Vec<(Point3<f64>, Vector3<f64>)> = Vec::new();
    let mut grid: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();

    'darts: for _ in 0..target.saturating_mul(30) {
        if points.len() >= target {
            break;
        }
        let area_pick = rng.random_range(0.0..total_area);
        let r1: f64 = rng.random();
        let r2: f64 = rng.random();
        let bernoulli: f64 = rng.random();

        let face = cumulative_area.partition_point(|&c| c <= area_pick);
        let normal = mesh.face_normal(face);
        if normal.z < cos_limit {
            continue;
        }
        let [ia, ib, ic] = mesh.faces[face];
        let (a, b, c) = (
            mesh.positions[ia as usize],
            mesh.positions[ib as usize],
            mesh.positions[ic as usize],
        );
        let sq = r1.sqrt();
        let p = Point3::from(
            a.coords * (1.0 - sq) + b.coords * (sq * (1.0 - r2)) + c.coords * (sq * r2),
        );
        if bernoulli >= mask.eval_scalar(p).clamp(0.0, 1.0) {
            continue;
        }
        let key = grid_key(p, rule.min_spacing);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    let neighbor = (key.0 + dx, key.1 + dy, key.2 + dz);
                    for &i in grid.get(&neighbor).into_iter().flatten() {
                        if (points[i].0 - p).norm_squared() < spacing_sq {
                            continue 'darts;
                        }
                    }
                }
            }
        }
        grid.entry(key).or_default().push(points.len());
        points.push((p, normal));
    }
    Ok(points)
}

/// One entry of an asset distribution: what to place and how often.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssetChoice {
    pub kind: String,
    /// Relative selection weight; weights need not sum to one.
    pub weight: f64,
    pub footprint_radius: f64,
    pub tags: Vec<String>,
}

/// Assign an asset kind and orientation to each surface point. Kinds are
/// drawn in proportion to their weights, yaw is uniform, and the placeholder
/// up axis is aligned with the surface normal. Each point uses its own hash
/// stream keyed by index, so results never depend on traversal order.
pub fn place_assets(
    points: &[(Point3<f64>, Vector3<f64>)],
    distribution: &[AssetChoice],
    seed: u64,
) -> Result<Vec<Placeholder>, SceneError> {
    if distribution.is_empty() {
        return Err(SceneError::InvalidParams("asset distribution is empty".into()));
    }
    for choice in distribution {
        if !(choice.weight >= 0.0 && choice.weight.is_finite()) {
            return Err(SceneError::InvalidParams(format!(
                "asset {} weight {} must be finite and non-negative",
                choice.kind, choice.weight
            )));
        }
        if !(choice.footprint_radius > 0.0 && choice.footprint_radius.is_finite()) {
            return Err(SceneError::InvalidParams(format!(
                "asset {} footprint radius {} must be positive",
                choice.kind, choice.footprint_radius
            )));
        }
    }
    let total_weight: f64 = distribution.iter().map(|c| c.weight).sum();
    if total_weight <= 0.0 {
        return Err(SceneError::InvalidParams("asset distribution weights sum to zero".into()));
    }

    let mut out = Vec::with_capacity(points.len());
    for (i, (p, n)) in points.iter().enumerate() {
        let point_seed = substream_index(seed, i as u64);
        let mut rng = stream(point_seed);
        let mut remaining = rng.random_range(0.0..total_weight);
        let mut pick = distribution.len() - 1;
        for (j, choice) in distribution.iter().enumerate() {
            if remaining < choice.weight {
                pick = j;
                break;
            }
            remaining -= choice.weight;
        }
        let yaw = rng.random_range(0.0..TAU);
        let align = UnitQuaternion::rotation_between(&Vector3::z(), n).unwrap_or_else(|| {
            UnitQuaternion::from_axis_angle(&Vector3::x_axis(), PI)
        });
        let rotation = align * UnitQuaternion::from_axis_angle(&Vector3::z_axis(), yaw);
        let choice = &distribution[pick];
        out.push(Placeholder {
            kind: choice.kind.clone(),
            seed: point_seed,
            transform: Isometry3::from_parts(Translation3::from(p.coords), rotation),
            footprint_radius: choice.footprint_radius,
            tags: choice.tags.clone(),
        });
    }
    Ok(out)
}
