//! Solid Voronoi cells over a jittered lattice.
//!
//! A [`VoronoiCellField`] evaluates the signed distance to a union of
//! selected ("active") Voronoi cells. Feature points sit one per lattice
//! cell, jittered by the fixed hash, so cell geometry needs no stored data;
//! only the active-cell index list is carried. A cell's distance is the
//! maximum over bisector half-space distances against its lattice
//! neighbors, shrunk by half the gap width so adjacent active cells are
//! separated by `gap` meters of air. Optional noise modulates the gap
//! multiplicatively (±50%), so a zero gap stays exactly zero.

use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use super::noise::{feature_point, noise_value, NoiseSpec};

/// Clearance returned where no active cell is in range: a query can never
/// sit closer than this to any rock surface.
fn far_clearance(cell_size: f64, gap: f64) -> f64 {
    0.25 * cell_size + 0.5 * gap
}

/// Feature point of a lattice cell in world meters, independent of any
/// field instance; [`VoronoiCellField::feature_world`] matches this exactly.
pub(crate) fn feature_for(seed: u64, cell_size: f64, cell: (i64, i64, i64)) -> Point3<f64> {
    let f = feature_point(seed, cell.0, cell.1, cell.2);
    Point3::new(f.x * cell_size, f.y * cell_size, f.z * cell_size)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoronoiCellField {
    /// Lattice pitch in meters.
    pub cell_size: f64,
    /// Air gap carved between adjacent cells, meters.
    pub gap: f64,
    /// Optional multiplicative modulation of the gap, sampled in world space.
    pub gap_noise: Option<NoiseSpec>,
    pub seed: u64,
    /// Sorted list of lattice cells that are solid.
    active: Vec<(i32, i32, i32)>,
}

impl VoronoiCellField {
    pub fn new(
        cell_size: f64,
        gap: f64,
        gap_noise: Option<NoiseSpec>,
        seed: u64,
        mut active: Vec<(i32, i32, i32)>,
    ) -> Result<Self, String> {
        if !(cell_size > 0.0) || !cell_size.is_finite() {
            return Err(format!("cell size must be positive, got {cell_size}"));
        }
        if !gap.is_finite() || gap < 0.0 {
            return Err(format!("gap must be >= 0, got {gap}"));
        }
        if let Some(n) = &gap_noise {
            n.validate()?;
        }
        active.sort_unstable();
        active.dedup();
        Ok(VoronoiCellField { cell_size, gap, gap_noise, seed, active })
    }

    pub fn active_cells(&self) -> &[(i32, i32, i32)] {
        &self.active
    }

    pub fn is_active(&self, cell: (i32, i32, i32)) -> bool {
        self.active.binary_search(&cell).is_ok()
    }

    /// Feature point of a lattice cell, in world meters.
    pub fn feature_world(&self, cell: (i32, i32, i32)) -> Point3<f64> {
        feature_for(self.seed, self.cell_size, (cell.0 as i64, cell.1 as i64, cell.2 as i64))
    }

    /// Signed distance to the union of active cells.
    pub fn distance(&self, p: Point3<f64>) -> f64 {
        let q = Point3::new(p.x / self.cell_size, p.y / self.cell_size, p.z / self.cell_size);
        let base = (q.x.floor() as i64, q.y.floor() as i64, q.z.floor() as i64);

        // Gather the 5³ neighborhood of feature points once.
        let mut features = [(0i64, 0i64, 0i64, Point3::origin()); 125];
        let mut idx = 0;
        for dz in -2..=2i64 {
            for dy in -2..=2i64 {
                for dx in -2..=2i64 {
                    let c = (base.0 + dx, base.1 + dy, base.2 + dz);
                    features[idx] = (c.0, c.1, c.2, feature_point(self.seed, c.0, c.1, c.2));
                    idx += 1;
                }
            }
        }

        // Active features, nearest first. The union distance is the minimum
        // over per-cell polyhedron distances; the few nearest cells are the
        // only ones that can attain it.
        let mut candidates: Vec<(usize, f64)> = Vec::with_capacity(8);
        for (i, &(cx, cy, cz, f)) in features.iter().enumerate() {
            let in_i32 = |v: i64| i32::try_from(v).ok();
            let cell = match (in_i32(cx), in_i32(cy), in_i32(cz)) {
                (Some(a), Some(b), Some(c)) => (a, b, c),
                _ => continue,
            };
            if self.is_active(cell) {
                candidates.push((i, (f - q).norm()));
            }
        }
        if candidates.is_empty() {
            return far_clearance(self.cell_size, self.gap);
        }
        candidates.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());

        // Signed distance to a cell: max over bisector half-spaces.
        let mut d_cell = f64::INFINITY;
        for &(ci, _) in candidates.iter().take(4) {
            let center = features[ci].3;
            let mut d = f64::NEG_INFINITY;
            for (i, &(_, _, _, f)) in features.iter().enumerate() {
                if i == ci {
                    continue;
                }
                let axis = f - center;
                let len = axis.norm();
                if len < 1e-12 {
                    continue;
                }
                let mid = center + axis * 0.5;
                d = d.max((q - mid).dot(&(axis / len)));
            }
            d_cell = d_cell.min(d);
        }
        let gap_eff = match &self.gap_noise {
            Some(spec) => self.gap * (1.0 + 0.5 * noise_value(spec, p).clamp(-1.0, 1.0)),
            None => self.gap,
        };
        d_cell * self.cell_size + 0.5 * gap_eff
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, substream};
    use approx::assert_relative_eq;
    use rand::Rng;

    #[test]
    fn empty_field_keeps_clearance_everywhere() {
        let field = VoronoiCellField::new(2.0, 0.4, None, 5, vec![]).unwrap();
        let floor = 0.25 * 2.0 + 0.5 * 0.4;
        let mut rng = stream(substream(9, "cells-empty"));
        for _ in 0..1000 {
            let p = Point3::new(
                rng.random_range(-20.0..20.0),
                rng.random_range(-20.0..20.0),
                rng.random_range(-20.0..20.0),
            );
            assert!(field.distance(p) >= floor);
        }
    }

    #[test]
    fn active_cell_interior_is_solid() {
        let field = VoronoiCellField::new(1.5, 0.1, None, 11, vec![(0, 0, 0)]).unwrap();
        let center = field.feature_world((0, 0, 0));
        assert!(field.distance(center) < 0.0, "feature point not inside its own cell");
    }

    #[test]
    fn zero_gap_adjacent_cells_touch_on_bisector() {
        let field =
            VoronoiCellField::new(1.0, 0.0, None, 23, vec![(0, 0, 0), (1, 0, 0)]).unwrap();
        let a = field.feature_world((0, 0, 0));
        let b = field.feature_world((1, 0, 0));
        // Walk the exact bisector plane between the two feature points: the
        // union must be ≤ 0 there (cells meet with no air between them).
        let mid = nalgebra::center(&a, &b);
        let n = (b - a).normalize();
        let mut t1 = n.cross(&nalgebra::Vector3::z());
        if t1.norm() < 1e-6 {
            t1 = n.cross(&nalgebra::Vector3::y());
        }
        let t1 = t1.normalize();
        let t2 = n.cross(&t1);
        let mut rng = stream(substream(3, "bisector"));
        for _ in 0..200 {
            let u = rng.random_range(-0.05..0.05);
            let v = rng.random_range(-0.05..0.05);
            let p = mid + t1 * u + t2 * v;
            let d = field.distance(p);
            assert!(d <= 1e-9, "gap appeared on bisector: {d}");
        }
    }

    #[test]
    fn gap_separates_neighbors() {
        let gap = 0.2;
        let field =
            VoronoiCellField::new(1.0, gap, None, 23, vec![(0, 0, 0), (1, 0, 0)]).unwrap();
        let a = field.feature_world((0, 0, 0));
        let b = field.feature_world((1, 0, 0));
        let mid = nalgebra::center(&a, &b);
        // Exactly between the features the gap leaves `gap/2` of air.
        assert_relative_eq!(field.distance(mid), gap / 2.0, epsilon = 1e-9);
    }

    #[test]
    fn distance_is_pure() {
        let spec = NoiseSpec::perlin(4, 2.0);
        let field =
            VoronoiCellField::new(1.0, 0.1, Some(spec), 8, vec![(0, 0, 0), (0, 1, 0)]).unwrap();
        let p = Point3::new(0.3, 0.9, 0.2);
        assert_eq!(field.distance(p).to_bits(), field.distance(p).to_bits());
    }
}
