//! Indexed triangle meshes with per-face instance ids.
//!
//! One `Mesh` may hold many scene instances; `face_instance[f]` says which.
//! Topology helpers (Euler characteristic, manifold checks) treat the mesh
//! as an undirected simplicial complex on the index buffer — positions play
//! no part, so duplicated-position vertices count separately.

use std::collections::HashMap;

use nalgebra::{Isometry3, Point3, Vector3};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Mesh {
    pub positions: Vec<Point3<f64>>,
    pub faces: Vec<[u32; 3]>,
    /// Instance id per face.
    pub face_instance: Vec<u32>,
    /// Optional scalar per vertex (growth fields, projection sources).
    pub vertex_field: Option<Vec<f64>>,
}

impl Mesh {
    pub fn new() -> Self {
        Mesh::default()
    }

    pub fn vertex_count(&self) -> usize {
        self.positions.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    /// Check index ranges and parallel-array lengths.
    pub fn validate(&self) -> Result<(), String> {
        if self.face_instance.len() != self.faces.len() {
            return Err(format!(
                "face_instance length {} != face count {}",
                self.face_instance.len(),
                self.faces.len()
            ));
        }
        if let Some(f) = &self.vertex_field {
            if f.len() != self.positions.len() {
                return Err(format!(
                    "vertex_field length {} != vertex count {}",
                    f.len(),
                    self.positions.len()
                ));
            }
        }
        let n = self.positions.len() as u32;
        for (i, face) in self.faces.iter().enumerate() {
            for &v in face {
                if v >= n {
                    return Err(format!("face {i} references vertex {v} of {n}"));
                }
            }
            if face[0] == face[1] || face[1] == face[2] || face[0] == face[2] {
                return Err(format!("face {i} is degenerate: {face:?}"));
            }
        }
        for p in &self.positions {
            if !p.coords.iter().all(|c| c.is_finite()) {
                return Err(format!("non-finite vertex {p:?}"));
            }
        }
        Ok(())
    }

    /// Append another mesh, keeping its instance ids.
    pub fn merge(&mut self, other: &Mesh) {
        let base = self.positions.len() as u32;
        self.positions.extend_from_slice(&other.positions);
        self.faces.extend(other.faces.iter().map(|f| [f[0] + base, f[1] + base, f[2] + base]));
        self.face_instance.extend_from_slice(&other.face_instance);
        match (&mut self.vertex_field, &other.vertex_field) {
            (Some(a), Some(b)) => a.extend_from_slice(b),
            (Some(a), None) => a.extend(std::iter::repeat(0.0).take(other.positions.len())),
            (None, Some(b)) => {
                let mut f = vec![0.0; base as usize];
                f.extend_from_slice(b);
                self.vertex_field = Some(f);
            }
            (None, None) => {}
        }
    }

    /// Set every face's instance id.
    pub fn set_instance(&mut self, id: u32) {
        for v in &mut self.face_instance {
            *v = id;
        }
    }

    pub fn apply_isometry(&mut self, iso: &Isometry3<f64>) {
        for p in &mut self.positions {
            *p = iso * *p;
        }
    }

    pub fn scale_about_origin(&mut self, s: f64) {
        for p in &mut self.positions {
            p.coords *= s;
        }
    }

    pub fn bbox(&self) -> Option<(Point3<f64>, Point3<f64>)> {
        let first = self.positions.first()?;
        let mut min = *first;
        let mut max = *first;
        for p in &self.positions {
            for i in 0..3 {
                min[i] = min[i].min(p[i]);
                max[i] = max[i].max(p[i]);
            }
        }
        Some((min, max))
    }

    pub fn face_normal(&self, f: usize) -> Vector3<f64> {
        let [a, b, c] = self.faces[f];
        let (a, b, c) =
            (self.positions[a as usize], self.positions[b as usize], self.positions[c as usize]);
        let n = (b - a).cross(&(c - a));
        let len = n.norm();
        if len > 0.0 {
            n / len
        } else {
            Vector3::z()
        }
    }

    pub fn face_area(&self, f: usize) -> f64 {
        let [a, b, c] = self.faces[f];
        let (a, b, c) =
            (self.positions[a as usize], self.positions[b as usize], self.positions[c as usize]);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    pub fn total_area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    /// Area-weighted vertex normals.
    pub fn vertex_normals(&self) -> Vec<Vector3<f64>> {
        let mut normals = vec![Vector3::zeros(); self.positions.len()];
        for f in 0..self.faces.len() {
            let [a, b, c] = self.faces[f];
            let (pa, pb, pc) = (
                self.positions[a as usize],
                self.positions[b as usize],
                self.positions[c as usize],
            );
            let n = (pb - pa).cross(&(pc - pa)); // length ∝ 2·area
            normals[a as usize] += n;
            normals[b as usize] += n;
            normals[c as usize] += n;
        }
        for n in &mut normals {
            let len = n.norm();
            if len > 0.0 {
                *n /= len;
            } else {
                *n = Vector3::z();
            }
        }
        normals
    }

    /// Count of faces sharing each undirected edge.
    pub fn edge_face_counts(&self) -> HashMap<(u32, u32), u32> {
        let mut edges: HashMap<(u32, u32), u32> = HashMap::new();
        for face in &self.faces {
            for k in 0..3 {
                let (a, b) = (face[k], face[(k + 1) % 3]);
                let key = if a < b { (a, b) } else { (b, a) };
                *edges.entry(key).or_insert(0) += 1;
            }
        }
        edges
    }

    /// V − E + F over the index buffer.
    pub fn euler_characteristic(&self) -> i64 {
        let e = self.edge_face_counts().len() as i64;
        self.positions.len() as i64 - e + self.faces.len() as i64
    }

    /// True when every edge borders exactly two faces.
    pub fn is_closed_manifold(&self) -> bool {
        !self.faces.is_empty() && self.edge_face_counts().values().all(|&c| c == 2)
    }

    /// True when no edge borders more than two faces (boundary allowed).
    pub fn is_manifold(&self) -> bool {
        self.edge_face_counts().values().all(|&c| c <= 2)
    }

    /// Number of edges on exactly one face.
    pub fn boundary_edge_count(&self) -> usize {
        self.edge_face_counts().values().filter(|&&c| c == 1).count()
    }
}
