//! Differential growth on a triangle mesh.
//!
//! Each vertex moves under a weighted sum of forces — attraction toward its
//! one-ring mean, repulsion from nearby non-neighbors, inflation along the
//! vertex normal, and seeded jitter — and any edge stretched past the split
//! length is subdivided, so the surface gains area and buckles. Growth halts
//! once the face budget or the iteration cap is reached.

use std::collections::{HashMap, HashSet};

use nalgebra::Vector3;

use super::GrowthError;
use crate::mesh::Mesh;
use crate::rng::{hash_cell, hash_to_unit};

#[derive(Debug, Clone, PartialEq)]
pub struct DifferentialGrowthParams {
    pub attraction: f64,
    pub repulsion: f64,
    pub growth: f64,
    pub noise: f64,
    /// Displacement per unit force, meters.
    pub step_size: f64,
    /// Edges longer than this are subdivided.
    pub split_length: f64,
    pub max_faces: usize,
    pub max_iterations: u32,
    /// Scale on boundary-vertex displacement; 1 treats the rim like the
    /// interior, smaller values pin it down.
    pub boundary_factor: f64,
    pub seed: u64,
}

impl DifferentialGrowthParams {
    pub fn validate(&self) -> Result<(), GrowthError> {
        let weights = [self.attraction, self.repulsion, self.growth, self.noise];
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(GrowthError::InvalidParams("force weights must be ≥ 0".into()));
        }
        if !(self.step_size > 0.0) || !(self.split_length > 0.0) {
            return Err(GrowthError::InvalidParams(
                "step size and split length must be positive".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.boundary_factor) {
            return Err(GrowthError::InvalidParams("boundary factor must be in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Triangle fan around the origin in the z = 0 plane: the usual seed surface.
pub fn seed_disc(radius: f64, segments: u32) -> Mesh {
    assert!(segments >= 3 && radius > 0.0);
    let mut mesh = Mesh::new();
    mesh.positions.push(nalgebra::Point3::origin());
    for i in 0..segments {
        let a = std::f64::consts::TAU * i as f64 / segments as f64;
        mesh.positions.push(nalgebra::Point3::new(radius * a.cos(), radius * a.sin(), 0.0));
    }
    for i in 0..segments {
        mesh.faces.push([0, 1 + i, 1 + (i + 1) % segments]);
    }
    mesh.face_instance = vec![0; mesh.faces.len()];
    mesh
}

fn undirected_edges(mesh: &Mesh) -> Vec<(u32, u32)> {
    let mut set = HashSet::new();
    for f in &mesh.faces {
        for (a, b) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
            set.insert((a.min(b), a.max(b)));
        }
    }
    let mut edges: Vec<_> = set.into_iter().collect();
    edges.sort_unstable();
    edges
}

fn boundary_vertices(mesh: &Mesh) -> Vec<bool> {
    let mut flags = vec![false; mesh.positions.len()];
    for ((a, b), count) in mesh.edge_face_counts() {
        if count == 1 {
            flags[a as usize] = true;
            flags[b as usize] = true;
        }
    }
    flags
}

fn grid_key(p: &nalgebra::Point3<f64>, cell: f64) -> (i64, i64, i64) {
    ((p.x / cell).floor() as i64, (p.y / cell).floor() as i64, (p.z / cell).floor() as i64)
}

/// Split every edge longer than `limit`, repeatedly, until none remain.
/// Midpoint insertion keeps the mesh manifold: an interior edge turns two
/// triangles into four, a boundary edge turns one into two.
fn split_long_edges(mesh: &mut Mesh, limit: f64) {
    loop {
        let mut edge_faces: HashMap<(u32, u32), Vec<usize>> = HashMap::new();
        for (fi, f) in mesh.faces.iter().enumerate() {
            for (a, b) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
                edge_faces.entry((a.min(b), a.max(b))).or_default().push(fi);
            }
        }
        let mut long: Vec<(u32, u32)> = edge_faces
            .keys()
            .filter(|(a, b)| {
                (mesh.positions[*a as usize] - mesh.positions[*b as usize]).norm() > limit
            })
            .copied()
            .collect();
        if long.is_empty() {
            return;
        }
        long.sort_unstable();

        let mut dirty = vec![false; mesh.faces.len()];
        for (a, b) in long {
            let faces = &edge_faces[&(a, b)];
            if faces.iter().any(|fi| dirty[*fi]) {
                continue;
            }
            let mid = mesh.positions.len() as u32;
            mesh.positions.push(nalgebra::Point3::from(
                (mesh.positions[a as usize].coords + mesh.positions[b as usize].coords) * 0.5,
            ));
            if let Some(field) = &mut mesh.vertex_field {
                let v = 0.5 * (field[a as usize] + field[b as usize]);
                field.push(v);
            }
            for &fi in faces {
                dirty[fi] = true;
                let f = mesh.faces[fi];
                let k = (0..3)
                    .find(|k| {
                        let (u, v) = (f[*k], f[(*k + 1) % 3]);
                        (u.min(v), u.max(v)) == (a, b)
                    })
                    .expect("edge-face map out of sync");
                let (u, v, w) = (f[k], f[(k + 1) % 3], f[(k + 2) % 3]);
                mesh.faces[fi] = [u, mid, w];
                mesh.faces.push([mid, v, w]);
                mesh.face_instance.push(mesh.face_instance[fi]);
                dirty.push(true);
            }
        }
    }
}

/// Grow `seed` until the face budget or iteration cap is hit and return the
/// final surface.
pub fn differential_growth(
    seed: &Mesh,
    params: &DifferentialGrowthParams,
) -> Result<Mesh, GrowthError> {
    params.validate()?;
    if params.max_faces <= seed.face_count() {
        return Err(GrowthError::InvalidParams(
            "face budget must exceed the seed mesh".into(),
        ));
    }
    let mut mesh = seed.clone();
    let cutoff = 3.0 * params.split_length;
    let blow_up = 10.0 * params.split_length;

    for iter in 0..params.max_iterations {
        let n = mesh.positions.len();
        let edges = undirected_edges(&mesh);
        let mut neighbors: Vec<Vec<u32>> = vec![Vec::new(); n];
        for (a, b) in &edges {
            neighbors[*a as usize].push(*b);
            neighbors[*b as usize].push(*a);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        let boundary = boundary_vertices(&mesh);
        let normals = mesh.vertex_normals();

        let mut buckets: HashMap<(i64, i64, i64), Vec<u32>> = HashMap::new();
        for (i, p) in mesh.positions.iter().enumerate() {
            buckets.entry(grid_key(p, cutoff)).or_default().push(i as u32);
        }

        let mut displacement = vec![Vector3::zeros(); n];
        for v in 0..n {
            let p = mesh.positions[v];
            let mut force = Vector3::zeros();

            if params.attraction > 0.0 && !neighbors[v].is_empty() {
                let mut mean = Vector3::zeros();
                for nb in &neighbors[v] {
                    mean += mesh.positions[*nb as usize].coords;
                }
                mean /= neighbors[v].len() as f64;
                force += (mean - p.coords) * params.attraction;
            }

            if params.repulsion > 0.0 {
                let key = grid_key(&p, cutoff);
                let mut push = Vector3::zeros();
                let mut count = 0usize;
                for dx in -1..=1 {
                    for dy in -1..=1 {
                        for dz in -1..=1 {
                            let Some(cell) =
                                buckets.get(&(key.0 + dx, key.1 + dy, key.2 + dz))
                            else {
                                continue;
                            };
                            for &w in cell {
                                if w as usize == v
                                    || neighbors[v].binary_search(&w).is_ok()
                                {
                                    continue;
                                }
                                let away = p - mesh.positions[w as usize];
                                let d = away.norm();
                                if d > 1e-12 && d < cutoff {
                                    push += away / d * (1.0 - d / cutoff);
                                    count += 1;
                                }
                            }
                        }
                    }
                }
                // Averaged so a dense neighborhood pushes no harder than a
                // single close point; keeps the step bounded as the mesh
                // refines.
                if count > 0 {
                    force += push * (params.repulsion / count as f64);
                }
            }

            force += normals[v] * params.growth;

            if params.noise > 0.0 {
                let jitter = Vector3::new(
                    hash_to_unit(hash_cell(params.seed, v as i64, iter as i64, 0)),
                    hash_to_unit(hash_cell(params.seed, v as i64, iter as i64, 1)),
                    hash_to_unit(hash_cell(params.seed, v as i64, iter as i64, 2)),
                );
                force += (jitter * 2.0 - Vector3::repeat(1.0)) * params.noise;
            }

            let mut step = force * params.step_size;
            if boundary[v] {
                step *= params.boundary_factor;
            }
            if step.norm() > blow_up {
                return Err(GrowthError::Diverged {
                    step: iter,
                    what: format!("vertex {v} moved {:.3} in one step", step.norm()),
                });
            }
            displacement[v] = step;
        }

        for (p, d) in mesh.positions.iter_mut().zip(&displacement) {
            *p += d;
        }
        split_long_edges(&mut mesh, params.split_length);

        if mesh.face_count() >= params.max_faces {
            break;
        }
    }
    Ok(mesh)
}
