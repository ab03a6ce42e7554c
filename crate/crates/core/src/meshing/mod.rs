//! Isosurface extraction: uniform marching cubes over world-space lattices
//! and a camera-centric spherical variant whose cell size tracks projected
//! pixel size.
//!
//! Both meshers share one cell kernel and weld vertices through global
//! lattice-edge keys, so cells that share an edge reuse the exact crossing
//! vertex and the output is watertight wherever the lattice is.

pub mod tables;

mod camera;
mod spherical;

pub use camera::CameraModel;
pub use spherical::{
    spherical_marching_cubes, target_edge_length, SphericalGrid, SphericalMeshes,
};

use std::collections::HashMap;

use nalgebra::{Point3, Vector3};
use thiserror::Error;

use crate::fields::{Evaluator, FieldProgram, ValueType};
use crate::mesh::Mesh;
use tables::{CORNER_OFFSETS, EDGE_CORNERS, EDGE_TABLE, TRIANGLE_TABLE};

#[derive(Debug, Error)]
pub enum MeshingError {
    #[error("invalid camera: {0}")]
    InvalidCamera(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("field must be scalar-valued to mesh")]
    VectorField,
}

/// Assigns one vertex per crossed lattice edge, shared by all cells.
pub(crate) struct EdgeWelder {
    map: HashMap<(i64, i64, i64, u8), u32>,
}

impl EdgeWelder {
    pub(crate) fn new() -> Self {
        EdgeWelder { map: HashMap::new() }
    }

    /// Vertex for the edge leaving lattice point `base` along `axis`.
    /// `lo` is the sample at `base`, `hi` at the next point along the axis;
    /// the crossing is interpolated in that fixed order so both adjacent
    /// cells derive bit-identical positions.
    #[allow(clippy::too_many_arguments)]
    fn vertex(
        &mut self,
        mesh: &mut Mesh,
        base: [i64; 3],
        axis: u8,
        p_lo: Point3<f64>,
        p_hi: Point3<f64>,
        v_lo: f64,
        v_hi: f64,
        iso: f64,
    ) -> u32 {
        *self.map.entry((base[0], base[1], base[2], axis)).or_insert_with(|| {
            let denom = v_hi - v_lo;
            let mut t = if denom.abs() > f64::MIN_POSITIVE { (iso - v_lo) / denom } else { 0.5 };
            if !t.is_finite() {
                t = 0.5;
            }
            t = t.clamp(0.0, 1.0);
            let idx = mesh.positions.len() as u32;
            mesh.positions.push(p_lo + (p_hi - p_lo) * t);
            idx
        })
    }
}

/// Triangulate one cell. `cell` is its global lattice coordinate; corner
/// values and positions follow [`tables::CORNER_OFFSETS`] order. Faces wind
/// so normals point toward positive field values (outward for a solid
/// described by negative distances).
pub(crate) fn march_cell(
    cell: [i64; 3],
    corner_positions: &[Point3<f64>; 8],
    corner_values: &[f64; 8],
    iso: f64,
    welder: &mut EdgeWelder,
    mesh: &mut Mesh,
    instance: u32,
) -> bool {
    let mut case = 0usize;
    for (c, &v) in corner_values.iter().enumerate() {
        if v < iso {
            case |= 1 << c;
        }
    }
    let edge_mask = EDGE_TABLE[case];
    if edge_mask == 0 {
        return false;
    }

    let mut edge_vertex = [u32::MAX; 12];
    for (e, corners) in EDGE_CORNERS.iter().enumerate() {
        if edge_mask & (1 << e) == 0 {
            continue;
        }
        let (a, b) = (corners[0], corners[1]);
        let oa = CORNER_OFFSETS[a];
        let ob = CORNER_OFFSETS[b];
        let mut axis = 0u8;
        for d in 0..3 {
            if oa[d] != ob[d] {
                axis = d as u8;
            }
        }
        // Base is the corner with the smaller coordinate along the axis.
        let (lo, hi, off) = if oa[axis as usize] < ob[axis as usize] {
            (a, b, oa)
        } else {
            (b, a, ob)
        };
        let base = [
            cell[0] + off[0] as i64,
            cell[1] + off[1] as i64,
            cell[2] + off[2] as i64,
        ];
        edge_vertex[e] = welder.vertex(
            mesh,
            base,
            axis,
            corner_positions[lo],
            corner_positions[hi],
            corner_values[lo],
            corner_values[hi],
            iso,
        );
    }

    let mut emitted = false;
    let tri = &TRIANGLE_TABLE[case];
    let mut i = 0;
    while tri[i] >= 0 {
        let v0 = edge_vertex[tri[i] as usize];
        let v1 = edge_vertex[tri[i + 1] as usize];
        let v2 = edge_vertex[tri[i + 2] as usize];
        if v0 != v1 && v1 != v2 && v0 != v2 {
            mesh.faces.push([v0, v2, v1]);
            mesh.face_instance.push(instance);
            emitted = true;
        }
        i += 3;
    }
    emitted
}

/// Marching cubes over an explicit lattice of samples. `dims` are lattice
/// point counts per axis (x fastest in `values`), so the cell grid is one
/// smaller along each.
pub fn marching_cubes_lattice(
    values: &[f64],
    dims: [usize; 3],
    origin: Point3<f64>,
    spacing: Vector3<f64>,
    iso: f64,
) -> Result<Mesh, MeshingError> {
    if dims.iter().any(|&d| d < 2) {
        return Err(MeshingError::InvalidGrid(format!(
            "lattice needs at least 2 points per axis, got {dims:?}"
        )));
    }
    if values.len() != dims[0] * dims[1] * dims[2] {
        return Err(MeshingError::InvalidGrid(format!(
            "expected {} samples for {dims:?}, got {}",
            dims[0] * dims[1] * dims[2],
            values.len()
        )));
    }
    if !(spacing.x > 0.0 && spacing.y > 0.0 && spacing.z > 0.0) {
        return Err(MeshingError::InvalidGrid(format!("spacing must be positive, got {spacing:?}")));
    }

    let (nx, ny, nz) = (dims[0], dims[1], dims[2]);
    let at = |ix: usize, iy: usize, iz: usize| values[(iz * ny + iy) * nx + ix];
    let pos = |ix: usize, iy: usize, iz: usize| {
        Point3::new(
            origin.x + ix as f64 * spacing.x,
            origin.y + iy as f64 * spacing.y,
            origin.z + iz as f64 * spacing.z,
        )
    };

    let mut mesh = Mesh::new();
    let mut welder = EdgeWelder::new();
    for iz in 0..nz - 1 {
        for iy in 0..ny - 1 {
            for ix in 0..nx - 1 {
                let mut corner_values = [0.0; 8];
                let mut corner_positions = [Point3::origin(); 8];
                for (c, off) in CORNER_OFFSETS.iter().enumerate() {
                    let (cx, cy, cz) = (ix + off[0], iy + off[1], iz + off[2]);
                    corner_values[c] = at(cx, cy, cz);
                    corner_positions[c] = pos(cx, cy, cz);
                }
                march_cell(
                    [ix as i64, iy as i64, iz as i64],
                    &corner_positions,
                    &corner_values,
                    iso,
                    &mut welder,
                    &mut mesh,
                    0,
                );
            }
        }
    }
    Ok(mesh)
}

/// Extract the zero level set of a distance field on a uniform lattice.
/// A field without sign changes yields an empty mesh.
pub fn marching_cubes_uniform(
    sdf: &FieldProgram,
    bbox_min: Point3<f64>,
    bbox_max: Point3<f64>,
    cells: [usize; 3],
) -> Result<Mesh, MeshingError> {
    if sdf.output_type() != ValueType::Scalar {
        return Err(MeshingError::VectorField);
    }
    if cells.contains(&0) {
        return Err(MeshingError::InvalidGrid("cell counts must be at least 1".into()));
    }
    let extent = bbox_max - bbox_min;
    if !(extent.x > 0.0 && extent.y > 0.0 && extent.z > 0.0) {
        return Err(MeshingError::InvalidGrid(format!(
            "degenerate bounding box {bbox_min:?}..{bbox_max:?}"
        )));
    }

    let dims = [cells[0] + 1, cells[1] + 1, cells[2] + 1];
    let spacing = Vector3::new(
        extent.x / cells[0] as f64,
        extent.y / cells[1] as f64,
        extent.z / cells[2] as f64,
    );
    let mut eval = Evaluator::new(sdf);
    let mut values = Vec::with_capacity(dims[0] * dims[1] * dims[2]);
    for iz in 0..dims[2] {
        for iy in 0..dims[1] {
            for ix in 0..dims[0] {
                let p = Point3::new(
                    bbox_min.x + ix as f64 * spacing.x,
                    bbox_min.y + iy as f64 * spacing.y,
                    bbox_min.z + iz as f64 * spacing.z,
                );
                values.push(eval.eval_scalar(p));
            }
        }
    }
    marching_cubes_lattice(&values, dims, bbox_min, spacing, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::sdf;
    use crate::fields::ProgramBuilder;

    fn sphere_mesh(radius: f64, cells: usize) -> Mesh {
        let prog = sdf::sphere(Point3::origin(), radius);
        marching_cubes_uniform(
            &prog,
            Point3::new(-2.0, -2.0, -2.0),
            Point3::new(2.0, 2.0, 2.0),
            [cells; 3],
        )
        .unwrap()
    }

    #[test]
    fn sphere_vertices_lie_on_surface() {
        let mesh = sphere_mesh(1.0, 64);
        let cell = 4.0 / 64.0;
        assert!(!mesh.is_empty());
        for p in &mesh.positions {
            assert!(
                (p.coords.norm() - 1.0).abs() < 2.0 * cell,
                "vertex {p:?} strays from the unit sphere"
            );
        }
    }

    #[test]
    fn sphere_is_closed_with_euler_two() {
        let mesh = sphere_mesh(1.0, 48);
        mesh.validate().unwrap();
        assert!(mesh.is_closed_manifold());
        assert_eq!(mesh.euler_characteristic(), 2);
    }

    #[test]
    fn sphere_faces_wind_outward() {
        let mesh = sphere_mesh(1.0, 32);
        for f in 0..mesh.face_count() {
            let [a, b, c] = mesh.faces[f];
            let centroid = (mesh.positions[a as usize].coords
                + mesh.positions[b as usize].coords
                + mesh.positions[c as usize].coords)
                / 3.0;
            assert!(
                mesh.face_normal(f).dot(&centroid) > 0.0,
                "face {f} winds inward"
            );
        }
    }

    #[test]
    fn all_positive_field_gives_empty_mesh() {
        let mut b = ProgramBuilder::new();
        let one = b.constant(1.0);
        let prog = b.finish(one);
        let mesh = marching_cubes_uniform(
            &prog,
            Point3::new(-1.0, -1.0, -1.0),
            Point3::new(1.0, 1.0, 1.0),
            [8; 3],
        )
        .unwrap();
        assert!(mesh.is_empty());
        assert_eq!(mesh.vertex_count(), 0);
    }

    #[test]
    fn torus_euler_characteristic_is_zero() {
        let prog = sdf::torus(Point3::origin(), 1.0, 0.4);
        let mesh = marching_cubes_uniform(
            &prog,
            Point3::new(-1.8, -0.9, -1.8),
            Point3::new(1.8, 0.9, 1.8),
            [72, 36, 72],
        )
        .unwrap();
        mesh.validate().unwrap();
        assert!(mesh.is_closed_manifold());
        assert_eq!(mesh.euler_characteristic(), 0);
    }

    #[test]
    fn single_corner_cell_yields_midpoint_triangle() {
        // Corner 0 inside at -1, all others +1: crossings at edge midpoints.
        let mut values = vec![1.0; 8];
        values[0] = -1.0;
        let mesh = marching_cubes_lattice(
            &values,
            [2, 2, 2],
            Point3::origin(),
            Vector3::new(1.0, 1.0, 1.0),
            0.0,
        )
        .unwrap();
        assert_eq!(mesh.face_count(), 1);
        assert_eq!(mesh.vertex_count(), 3);
        let mut got: Vec<_> = mesh.positions.iter().map(|p| (p.x, p.y, p.z)).collect();
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(got, vec![(0.0, 0.0, 0.5), (0.0, 0.5, 0.0), (0.5, 0.0, 0.0)]);
    }

    #[test]
    fn lattice_rejects_bad_inputs() {
        let values = vec![0.0; 8];
        assert!(marching_cubes_lattice(
            &values,
            [2, 2, 3],
            Point3::origin(),
            Vector3::new(1.0, 1.0, 1.0),
            0.0
        )
        .is_err());
        assert!(marching_cubes_lattice(
            &values,
            [2, 2, 1],
            Point3::origin(),
            Vector3::new(1.0, 1.0, 1.0),
            0.0
        )
        .is_err());
        let prog = sdf::sphere(Point3::origin(), 1.0);
        assert!(
            marching_cubes_uniform(&prog, Point3::origin(), Point3::origin(), [4; 3]).is_err()
        );
        assert!(marching_cubes_uniform(
            &prog,
            Point3::origin(),
            Point3::new(1.0, 1.0, 1.0),
            [0, 4, 4]
        )
        .is_err());
    }
}
