//! Logarithmic-spiral sweeps for shell geometry.
//!
//! A 2D cross-section is swept by repeating one similarity transform:
//! rotate about the vertical axis, scale toward the apex, and displace
//! laterally and axially. Ring k is the k-fold composition applied to the
//! section, consecutive rings are bridged with quads, and both ends are
//! capped, so the result is a closed tube that may legitimately pass
//! through itself where whorls overlap.

use nalgebra::{Point3, Rotation3, Vector3};
use serde::{Deserialize, Serialize};

use super::GrowthError;
use crate::mesh::Mesh;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpiralSweepParams {
    /// Rotation about +z per ring, radians.
    pub rotation: f64,
    /// Uniform shrink per ring, in (0, 1].
    pub scale_ratio: f64,
    /// Displacement along +z per ring.
    pub axial: f64,
    /// Displacement along the rotating +x per ring.
    pub lateral: f64,
    /// Number of swept segments; the mesh has `loops + 1` rings.
    pub loops: u32,
}

impl SpiralSweepParams {
    pub fn validate(&self) -> Result<(), GrowthError> {
        if !(self.scale_ratio > 0.0 && self.scale_ratio <= 1.0) {
            return Err(GrowthError::InvalidParams("scale ratio must be in (0, 1]".into()));
        }
        if self.loops == 0 {
            return Err(GrowthError::InvalidParams("need at least one loop".into()));
        }
        if !(self.rotation.is_finite() && self.axial.is_finite() && self.lateral.is_finite()) {
            return Err(GrowthError::InvalidParams("displacements must be finite".into()));
        }
        Ok(())
    }
}

/// Sweep `section` (a simple polygon in (u, v) coordinates, embedded as
/// (u, 0, v)) into a capped spiral tube.
pub fn spiral_sweep(section: &[[f64; 2]], params: &SpiralSweepParams) -> Result<Mesh, GrowthError> {
    params.validate()?;
    if section.len() < 3 {
        return Err(GrowthError::InvalidParams("section needs at least 3 vertices".into()));
    }

    let n = section.len() as u32;
    let step = Vector3::new(params.lateral, 0.0, params.axial);
    let mut mesh = Mesh::new();

    let mut offset = Vector3::zeros();
    for k in 0..=params.loops {
        let rot = Rotation3::from_axis_angle(&Vector3::z_axis(), params.rotation * k as f64);
        let scale = params.scale_ratio.powi(k as i32);
        for p in section {
            let local = Vector3::new(p[0], 0.0, p[1]) * scale;
            mesh.positions.push(Point3::from(rot * local + offset));
        }
        offset = Rotation3::from_axis_angle(&Vector3::z_axis(), params.rotation)
            * (offset * params.scale_ratio)
            + step;
    }

    for k in 0..params.loops {
        let r0 = k * n;
        let r1 = r0 + n;
        for i in 0..n {
            let j = (i + 1) % n;
            mesh.faces.push([r0 + i, r0 + j, r1 + j]);
            mesh.faces.push([r0 + i, r1 + j, r1 + i]);
        }
    }

    let centroid = |positions: &[Point3<f64>], ring: u32| -> Point3<f64> {
        let mut c = Vector3::zeros();
        for i in 0..n {
            c += positions[(ring * n + i) as usize].coords;
        }
        Point3::from(c / n as f64)
    };
    let first_cap = centroid(&mesh.positions, 0);
    let last_cap = centroid(&mesh.positions, params.loops);
    let first_center = mesh.positions.len() as u32;
    mesh.positions.push(first_cap);
    let last_center = mesh.positions.len() as u32;
    mesh.positions.push(last_cap);
    let last_ring = params.loops * n;
    for i in 0..n {
        let j = (i + 1) % n;
        mesh.faces.push([j, i, first_center]);
        mesh.faces.push([last_ring + i, last_ring + j, last_center]);
    }

    mesh.face_instance = vec![0; mesh.faces.len()];
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::growth::presets::{nautilus_shell, regular_section};

    fn square() -> Vec<[f64; 2]> {
        vec![[1.0, -1.0], [1.0, 1.0], [-1.0, 1.0], [-1.0, -1.0]]
    }

    #[test]
    fn no_rotation_no_shrink_gives_a_prism() {
        let params = SpiralSweepParams {
            rotation: 0.0,
            scale_ratio: 1.0,
            axial: 0.25,
            lateral: 0.0,
            loops: 12,
        };
        let mesh = spiral_sweep(&square(), &params).unwrap();
        assert!(mesh.is_closed_manifold());
        assert_eq!(mesh.euler_characteristic(), 2);
        for i in 0..4usize {
            let base = mesh.positions[i];
            let top = mesh.positions[12 * 4 + i];
            assert_eq!(top.z - base.z, 12.0 * 0.25);
            assert_eq!(top.x, base.x);
            assert_eq!(top.y, base.y);
        }
    }

    #[test]
    fn ring_extent_follows_the_scale_ratio_exactly() {
        let section = regular_section(1.0, 6);
        let params = SpiralSweepParams {
            rotation: 0.4,
            scale_ratio: 0.9,
            axial: 0.1,
            lateral: 0.05,
            loops: 20,
        };
        let mesh = spiral_sweep(&section, &params).unwrap();
        for k in 0..=20u32 {
            let ring: Vec<_> =
                (0..6).map(|i| mesh.positions[(k * 6 + i) as usize]).collect();
            let centroid =
                Point3::from(ring.iter().map(|p| p.coords).sum::<nalgebra::Vector3<f64>>() / 6.0);
            let expected = 0.9f64.powi(k as i32);
            for p in &ring {
                let r = (p - centroid).norm();
                assert!(
                    (r - expected).abs() < 1e-12 * (1.0 + expected),
                    "ring {k}: radius {r} vs {expected}"
                );
            }
        }
    }

    #[test]
    fn nautilus_preset_is_a_planar_spiral() {
        let (section, params) = nautilus_shell();
        let mesh = spiral_sweep(&section, &params).unwrap();
        assert!(mesh.is_closed_manifold());
        let (lo, hi) = mesh.bbox().unwrap();
        let extents = [hi.x - lo.x, hi.y - lo.y, hi.z - lo.z];
        let max = extents.iter().cloned().fold(f64::MIN, f64::max);
        let min = extents.iter().cloned().fold(f64::MAX, f64::min);
        assert!(max / min < 2.0, "extents {extents:?}");
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        let params = SpiralSweepParams {
            rotation: 0.1,
            scale_ratio: 0.0,
            axial: 0.1,
            lateral: 0.0,
            loops: 4,
        };
        assert!(spiral_sweep(&square(), &params).is_err());
        let ok = SpiralSweepParams { scale_ratio: 0.9, ..params };
        assert!(spiral_sweep(&square()[..2], &ok).is_err());
    }
}
