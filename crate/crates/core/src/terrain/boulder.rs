//! Boulder meshes: convex hull of a random point cloud, roughened by two
//! levels of face extrusions and a cellular-noise displacement.

use nalgebra::Point3;
use rand::Rng;
use rand_distr::{Distribution, UnitSphere};
use thiserror::Error;

use crate::fields::noise::noise_value;
use crate::fields::{NoiseKind, NoiseSpec};
use crate::mesh::Mesh;
use crate::rng::{stream, substream_index};

/// One pass of random face extrusions.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ExtrusionLevel {
    /// Chance that any given face is extruded.
    pub probability: f64,
    /// Extrusion distance along the face normal, meters.
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BoulderParams {
    /// Points sampled for the hull; at least 4.
    pub vertex_count: usize,
    /// Nominal boulder radius, meters.
    pub radius: f64,
    pub large: ExtrusionLevel,
    pub small: ExtrusionLevel,
    /// Vertex displacement amplitude along vertex normals, meters.
    pub displacement: f64,
    /// Spatial frequency of the displacement field, 1/meters.
    pub displacement_frequency: f64,
}

impl Default for BoulderParams {
    fn default() -> Self {
        BoulderParams {
            vertex_count: 32,
            radius: 1.0,
            large: ExtrusionLevel { probability: 0.3, distance: 0.3 },
            small: ExtrusionLevel { probability: 0.2, distance: 0.1 },
            displacement: 0.05,
            displacement_frequency: 3.0,
        }
    }
}

impl BoulderParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.vertex_count < 4 {
            return Err(format!("need at least 4 hull points, got {}", self.vertex_count));
        }
        if !(self.radius > 0.0) || !self.radius.is_finite() {
            return Err(format!("radius must be positive, got {}", self.radius));
        }
        for level in [&self.large, &self.small] {
            if !(0.0..=1.0).contains(&level.probability) {
                return Err(format!("extrusion probability out of [0, 1]: {}", level.probability));
            }
            if !(level.distance >= 0.0) || !level.distance.is_finite() {
                return Err(format!("extrusion distance must be >= 0, got {}", level.distance));
            }
        }
        if !(self.displacement >= 0.0) || !self.displacement.is_finite() {
            return Err(format!("displacement must be >= 0, got {}", self.displacement));
        }
        if !(self.displacement_frequency > 0.0) {
            return Err(format!(
                "displacement frequency must be positive, got {}",
                self.displacement_frequency
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum BoulderError {
    #[error("invalid boulder parameters: {0}")]
    InvalidParams(String),
    #[error("point cloud kept degenerating; gave up after {0} attempts")]
    DegenerateHull(u32),
}

const HULL_ATTEMPTS: u32 = 10;

/// Generate one boulder. Attempts are keyed on `(seed, attempt)`: if an
/// attempt's point cloud has no 3D hull (or the finished mesh fails
/// validation), the next substream is tried, up to [`HULL_ATTEMPTS`].
pub fn generate_boulder(seed: u64, params: &BoulderParams) -> Result<Mesh, BoulderError> {
    params.validate().map_err(BoulderError::InvalidParams)?;

    for attempt in 0..HULL_ATTEMPTS {
        let mut rng = stream(substream_index(seed, attempt as u64));

        // Anisotropic shell of points: directions on the sphere, radii near
        // the rim so most points end up on the hull.
        let stretch = [
            rng.random_range(0.7..1.3),
            rng.random_range(0.7..1.3),
            rng.random_range(0.7..1.3),
        ];
        let points: Vec<Point3<f64>> = (0..params.vertex_count)
            .map(|_| {
                let dir: [f64; 3] = UnitSphere.sample(&mut rng);
                let r = params.radius * rng.random_range(0.75..1.0);
                Point3::new(
                    dir[0] * r * stretch[0],
                    dir[1] * r * stretch[1],
                    dir[2] * r * stretch[2],
                )
            })
            .collect();

        let Some(faces) = convex_hull(&points) else {
            continue;
        };
        let mut mesh = compact(&points, &faces);

        for level in [&params.large, &params.small] {
            extrude_random_faces(&mut mesh, level, &mut rng);
        }

        if params.displacement > 0.0 {
            let spec = NoiseSpec {
                kind: NoiseKind::VoronoiF1,
                ..NoiseSpec::perlin(
                    crate::rng::substream(seed, "boulder-displacement"),
                    params.displacement_frequency,
                )
            };
            let normals = mesh.vertex_normals();
            for (v, n) in mesh.positions.iter_mut().zip(&normals) {
                let w = noise_value(&spec, *v);
                *v += n * (params.displacement * (w - 0.7));
            }
        }

        if mesh.validate().is_ok() && mesh.is_closed_manifold() && mesh.euler_characteristic() == 2
        {
            return Ok(mesh);
        }
    }
    Err(BoulderError::DegenerateHull(HULL_ATTEMPTS))
}

/// Incremental convex hull. Returns outward-wound triangles over the input
/// indices, or `None` when the points have no 3D extent (fewer than 4
/// points, or all nearly collinear/coplanar).
pub(crate) fn convex_hull(points: &[Point3<f64>]) -> Option<Vec<[u32; 3]>> {
    if points.len() < 4 {
        return None;
    }
    let (mut lo, mut hi) = (points[0], points[0]);
    for p in points {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let eps = 1e-9 * (hi - lo).norm().max(1e-30);

    let signed = |f: [u32; 3], p: &Point3<f64>| {
        let (a, b, c) =
            (points[f[0] as usize], points[f[1] as usize], points[f[2] as usize]);
        (b - a).cross(&(c - a)).normalize().dot(&(p - a))
    };

    // Seed tetrahedron from extreme points.
    let i0 = (0..points.len()).min_by(|&a, &b| points[a].x.total_cmp(&points[b].x))? as u32;
    let far = |cost: &dyn Fn(&Point3<f64>) -> f64| {
        (0..points.len())
            .max_by(|&a, &b| cost(&points[a]).total_cmp(&cost(&points[b])))
            .map(|i| i as u32)
    };
    let p0 = points[i0 as usize];
    let i1 = far(&|p| (p - p0).norm())?;
    if (points[i1 as usize] - p0).norm() <= eps {
        return None;
    }
    let axis = (points[i1 as usize] - p0).normalize();
    let i2 = far(&|p| ((p - p0) - axis * (p - p0).dot(&axis)).norm())?;
    let line_dist = {
        let d = points[i2 as usize] - p0;
        (d - axis * d.dot(&axis)).norm()
    };
    if line_dist <= eps {
        return None;
    }
    let i3 = far(&|p| signed([i0, i1, i2], p).abs())?;
    if signed([i0, i1, i2], &points[i3 as usize]).abs() <= eps {
        return None;
    }

    // Orient so the apex sits below the base normal, then the outward faces
    // of the tetrahedron are fixed.
    let (a, b, c) = if signed([i0, i1, i2], &points[i3 as usize]) > 0.0 {
        (i0, i2, i1)
    } else {
        (i0, i1, i2)
    };
    let d = i3;
    let mut faces = vec![[a, b, c], [b, a, d], [c, b, d], [a, c, d]];

    let seed_ids = [a, b, c, d];
    for i in 0..points.len() as u32 {
        if seed_ids.contains(&i) {
            continue;
        }
        let p = points[i as usize];
        let visible: Vec<bool> = faces.iter().map(|f| signed(*f, &p) > eps).collect();
        if !visible.iter().any(|v| *v) {
            continue;
        }

        // Horizon: directed edges of visible faces whose twin face is kept.
        let mut twin = std::collections::HashMap::new();
        for (fi, f) in faces.iter().enumerate() {
            for k in 0..3 {
                twin.insert((f[k], f[(k + 1) % 3]), fi);
            }
        }
        let mut next = Vec::with_capacity(faces.len() + 4);
        for (fi, f) in faces.iter().enumerate() {
            if !visible[fi] {
                next.push(*f);
                continue;
            }
            for k in 0..3 {
                let (u, v) = (f[k], f[(k + 1) % 3]);
                if !visible[twin[&(v, u)]] {
                    next.push([u, v, i]);
                }
            }
        }
        faces = next;
    }
    Some(faces)
}

/// Re-index hull faces onto a compact vertex list (hull order, first use).
fn compact(points: &[Point3<f64>], faces: &[[u32; 3]]) -> Mesh {
    let mut remap = vec![u32::MAX; points.len()];
    let mut mesh = Mesh::default();
    for f in faces {
        let mut g = [0u32; 3];
        for (slot, &old) in g.iter_mut().zip(f) {
            if remap[old as usize] == u32::MAX {
                remap[old as usize] = mesh.positions.len() as u32;
                mesh.positions.push(points[old as usize]);
            }
            *slot = remap[old as usize];
        }
        mesh.faces.push(g);
        mesh.face_instance.push(0);
    }
    mesh
}

/// Replace each selected face with a triangular prism: three lifted copies
/// of its corners, six side triangles, and the lifted top in place of the
/// original. Keeps the mesh closed and the Euler characteristic intact.
fn extrude_random_faces(mesh: &mut Mesh, level: &ExtrusionLevel, rng: &mut impl Rng) {
    let eligible = mesh.faces.len();
    for fi in 0..eligible {
        if rng.random::<f64>() >= level.probability {
            continue;
        }
        let f = mesh.faces[fi];
        let offset = mesh.face_normal(fi) * level.distance;
        let base = mesh.positions.len() as u32;
        for corner in f {
            mesh.positions.push(mesh.positions[corner as usize] + offset);
        }
        let lifted = [base, base + 1, base + 2];
        let instance = mesh.face_instance[fi];
        for k in 0..3 {
            let (u, v) = (f[k], f[(k + 1) % 3]);
            let (lu, lv) = (lifted[k], lifted[(k + 1) % 3]);
            mesh.faces.push([u, v, lv]);
            mesh.faces.push([u, lv, lu]);
            mesh.face_instance.push(instance);
            mesh.face_instance.push(instance);
        }
        mesh.faces[fi] = lifted;
    }
}
