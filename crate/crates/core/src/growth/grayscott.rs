//! Gray-Scott reaction-diffusion on an arbitrary vertex graph.
//!
//! The two species integrate with forward Euler and a uniform graph
//! Laplacian (neighbor mean minus center), so the same code runs on torus
//! grids and on mesh connectivity. Values are clamped to [0, 1.5] after
//! every step as a stability guard; the homogeneous state A=1, B=0 is a
//! fixed point the integrator preserves exactly.

use std::collections::HashSet;

use super::GrowthError;
use crate::mesh::Mesh;
use crate::rng::{hash_cell, hash_to_unit};

#[derive(Debug, Clone, PartialEq)]
pub struct ReactionDiffusionState {
    pub vertex_count: usize,
    pub edges: Vec<(u32, u32)>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub r_a: f64,
    pub r_b: f64,
    pub f: f64,
    pub k: f64,
    pub dt: f64,
}

impl ReactionDiffusionState {
    fn homogeneous(vertex_count: usize, edges: Vec<(u32, u32)>, rates: (f64, f64, f64, f64)) -> Self {
        ReactionDiffusionState {
            vertex_count,
            edges,
            a: vec![1.0; vertex_count],
            b: vec![0.0; vertex_count],
            r_a: rates.0,
            r_b: rates.1,
            f: rates.2,
            k: rates.3,
            dt: 1.0,
        }
    }

    /// Periodic `nx` × `ny` grid with 4-neighbor coupling, row-major
    /// indexing, initialized to the homogeneous state.
    pub fn on_grid_torus(nx: usize, ny: usize, r_a: f64, r_b: f64, f: f64, k: f64) -> Self {
        assert!(nx >= 3 && ny >= 3, "torus grid needs at least 3 cells per axis");
        let idx = |x: usize, y: usize| (y * nx + x) as u32;
        let mut edges = Vec::with_capacity(2 * nx * ny);
        for y in 0..ny {
            for x in 0..nx {
                edges.push((idx(x, y), idx((x + 1) % nx, y)));
                edges.push((idx(x, y), idx(x, (y + 1) % ny)));
            }
        }
        Self::homogeneous(nx * ny, edges, (r_a, r_b, f, k))
    }

    /// Couple along the unique undirected edges of a mesh.
    pub fn on_mesh(mesh: &Mesh, r_a: f64, r_b: f64, f: f64, k: f64) -> Self {
        let mut set = HashSet::new();
        for face in &mesh.faces {
            for (u, v) in [(face[0], face[1]), (face[1], face[2]), (face[2], face[0])] {
                set.insert((u.min(v), u.max(v)));
            }
        }
        let mut edges: Vec<_> = set.into_iter().collect();
        edges.sort_unstable();
        Self::homogeneous(mesh.vertex_count(), edges, (r_a, r_b, f, k))
    }

    /// Drop a seeded square of reactant into a torus grid (row length `nx`):
    /// A = 0.5, B = 0.25 plus ±1% hash noise, the usual ignition patch.
    pub fn perturb_square(&mut self, nx: usize, x0: usize, y0: usize, side: usize, seed: u64) {
        for dy in 0..side {
            for dx in 0..side {
                let x = (x0 + dx) % nx;
                let y = (y0 + dy) % (self.vertex_count / nx);
                let i = y * nx + x;
                let na = hash_to_unit(hash_cell(seed, x as i64, y as i64, 0)) - 0.5;
                let nb = hash_to_unit(hash_cell(seed, x as i64, y as i64, 1)) - 0.5;
                self.a[i] = 0.5 + 0.02 * na;
                self.b[i] = 0.25 + 0.02 * nb;
            }
        }
    }

    pub fn validate(&self) -> Result<(), GrowthError> {
        if self.a.len() != self.vertex_count || self.b.len() != self.vertex_count {
            return Err(GrowthError::InvalidParams("field length != vertex count".into()));
        }
        if self.edges.iter().any(|(u, v)| {
            *u as usize >= self.vertex_count || *v as usize >= self.vertex_count || u == v
        }) {
            return Err(GrowthError::InvalidParams("edge out of range".into()));
        }
        if !(self.dt > 0.0 && self.dt <= 1.0) {
            return Err(GrowthError::InvalidParams("dt must be in (0, 1]".into()));
        }
        if [self.r_a, self.r_b, self.f, self.k].iter().any(|r| !(*r >= 0.0)) {
            return Err(GrowthError::InvalidParams("rates must be ≥ 0".into()));
        }
        Ok(())
    }
}

/// Integrate `steps` forward-Euler steps and return the final A field.
pub fn gray_scott(
    state: &mut ReactionDiffusionState,
    steps: u32,
) -> Result<Vec<f64>, GrowthError> {
    state.validate()?;
    let n = state.vertex_count;
    let mut neighbors: Vec<Vec<u32>> = vec![Vec::new(); n];
    for (u, v) in &state.edges {
        neighbors[*u as usize].push(*v);
        neighbors[*v as usize].push(*u);
    }

    let mut next_a = vec![0.0; n];
    let mut next_b = vec![0.0; n];
    for step in 0..steps {
        for v in 0..n {
            let (a, b) = (state.a[v], state.b[v]);
            let (mut lap_a, mut lap_b) = (0.0, 0.0);
            if !neighbors[v].is_empty() {
                for nb in &neighbors[v] {
                    lap_a += state.a[*nb as usize];
                    lap_b += state.b[*nb as usize];
                }
                let inv = 1.0 / neighbors[v].len() as f64;
                lap_a = lap_a * inv - a;
                lap_b = lap_b * inv - b;
            }
            let reaction = a * b * b;
            next_a[v] = (a + state.dt * (state.r_a * lap_a - reaction + state.f * (1.0 - a)))
                .clamp(0.0, 1.5);
            next_b[v] = (b + state.dt * (state.r_b * lap_b + reaction - (state.f + state.k) * b))
                .clamp(0.0, 1.5);
        }
        std::mem::swap(&mut state.a, &mut next_a);
        std::mem::swap(&mut state.b, &mut next_b);
        if state.a.iter().chain(state.b.iter()).any(|x| !x.is_finite()) {
            return Err(GrowthError::Diverged { step, what: "reaction-diffusion field".into() });
        }
    }
    Ok(state.a.clone())
}
