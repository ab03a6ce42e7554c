//! Per-face resolution statistics: how many pixels each visible face won
//! and how much world surface it carries, with quantile summaries. These are
//! the numbers that show whether a meshing strategy spends triangles where
//! the image needs them.

use std::collections::BTreeMap;

use serde::Serialize;

use super::FrameBuffer;
use crate::mesh::Mesh;

/// Summary of the visible faces of one frame. Parallel vectors are sorted
/// by face id; quantiles are [min, q25, median, q75, max] with linear
/// interpolation, all zero when nothing is visible.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FaceStats {
    pub face_ids: Vec<u32>,
    pub pixel_counts: Vec<u32>,
    pub world_areas_cm2: Vec<f64>,
    pub pixel_quantiles: [f64; 5],
    pub area_quantiles: [f64; 5],
}

fn quantiles(sorted: &[f64]) -> [f64; 5] {
    if sorted.is_empty() {
        return [0.0; 5];
    }
    let pick = |p: f64| {
        let idx = p * (sorted.len() - 1) as f64;
        let lo = idx.floor() as usize;
        let hi = idx.ceil() as usize;
        let frac = idx - lo as f64;
        sorted[lo] * (1.0 - frac) + sorted[hi] * frac
    };
    [pick(0.0), pick(0.25), pick(0.5), pick(0.75), pick(1.0)]
}

/// Count pixels per visible face of `fb` and pair each count with the
/// face's world area. `mesh` must be the mesh the buffer was rasterized
/// from.
pub fn face_pixel_stats(fb: &FrameBuffer, mesh: &Mesh) -> FaceStats {
    let mut counts: BTreeMap<u32, u32> = BTreeMap::new();
    for i in 0..fb.len() {
        if fb.is_hit(i) {
            *counts.entry(fb.face[i]).or_insert(0) += 1;
        }
    }
    let face_ids: Vec<u32> = counts.keys().copied().collect();
    let pixel_counts: Vec<u32> = counts.values().copied().collect();
    let world_areas_cm2: Vec<f64> =
        face_ids.iter().map(|&f| mesh.face_area(f as usize) * 1e4).collect();

    let mut px: Vec<f64> = pixel_counts.iter().map(|&c| c as f64).collect();
    px.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut areas = world_areas_cm2.clone();
    areas.sort_by(|a, b| a.partial_cmp(b).unwrap());

    FaceStats {
        face_ids,
        pixel_counts,
        world_areas_cm2,
        pixel_quantiles: quantiles(&px),
        area_quantiles: quantiles(&areas),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::sdf;
    use crate::groundtruth::rasterize;
    use crate::meshing::{
        marching_cubes_uniform, spherical_marching_cubes, CameraModel, SphericalGrid,
    };
    use nalgebra::{Isometry3, Point3, Vector3};

    #[test]
    fn single_triangle_owns_every_pixel() {
        let camera = CameraModel::new(
            64,
            64,
            std::f64::consts::FRAC_PI_2,
            Isometry3::identity(),
            0.1,
            100.0,
        )
        .unwrap();
        let mut mesh = Mesh::default();
        mesh.positions = vec![
            Point3::new(-400.0, -400.0, 5.0),
            Point3::new(1200.0, -400.0, 5.0),
            Point3::new(-400.0, 1200.0, 5.0),
        ];
        mesh.faces = vec![[0, 1, 2]];
        mesh.face_instance = vec![0];
        let fb = rasterize(&mesh, &camera);
        let stats = face_pixel_stats(&fb, &mesh);
        assert_eq!(stats.face_ids, vec![0]);
        assert_eq!(stats.pixel_counts, vec![64 * 64]);
        let area = mesh.face_area(0) * 1e4;
        assert_eq!(stats.world_areas_cm2, vec![area]);
        assert_eq!(stats.pixel_quantiles, [4096.0; 5]);
        assert_eq!(stats.area_quantiles, [area; 5]);
    }

    #[test]
    fn empty_frame_gives_empty_stats() {
        let stats = face_pixel_stats(&FrameBuffer::empty(8, 8), &Mesh::default());
        assert!(stats.face_ids.is_empty());
        assert!(stats.pixel_counts.is_empty());
        assert!(stats.world_areas_cm2.is_empty());
        assert_eq!(stats.pixel_quantiles, [0.0; 5]);
        assert_eq!(stats.area_quantiles, [0.0; 5]);
    }

    #[test]
    fn quantiles_interpolate_linearly() {
        // Four faces winning 1, 2, 3, 4 pixels with areas 0.5, 1, 1.5, 2 m².
        let mut mesh = Mesh::default();
        for (i, legs) in [1.0, 2.0, 3.0, 4.0f64].iter().enumerate() {
            let base = (i * 3) as u32;
            mesh.positions.push(Point3::origin());
            mesh.positions.push(Point3::new(*legs, 0.0, 0.0));
            mesh.positions.push(Point3::new(0.0, 1.0, 0.0));
            mesh.faces.push([base, base + 1, base + 2]);
            mesh.face_instance.push(0);
        }
        let mut fb = FrameBuffer::empty(10, 1);
        let owners = [0, 1, 1, 2, 2, 2, 3, 3, 3, 3];
        for (i, &f) in owners.iter().enumerate() {
            fb.face[i] = f;
            fb.instance[i] = 0;
            fb.depth[i] = 1.0;
        }
        let stats = face_pixel_stats(&fb, &mesh);
        assert_eq!(stats.face_ids, vec![0, 1, 2, 3]);
        assert_eq!(stats.pixel_counts, vec![1, 2, 3, 4]);
        assert_eq!(stats.pixel_quantiles, [1.0, 1.75, 2.5, 3.25, 4.0]);
        let expected_areas = [5_000.0, 10_000.0, 15_000.0, 20_000.0];
        for (a, e) in stats.world_areas_cm2.iter().zip(expected_areas) {
            assert!((a - e).abs() < 1e-9, "area {a} vs {e}");
        }
        let expected_q = [5_000.0, 8_750.0, 12_500.0, 16_250.0, 20_000.0];
        for (a, e) in stats.area_quantiles.iter().zip(expected_q) {
            assert!((a - e).abs() < 1e-9, "quantile {a} vs {e}");
        }
    }

    #[test]
    fn adaptive_meshing_equalizes_pixel_coverage_on_a_receding_plane() {
        let camera = CameraModel::new(
            256,
            256,
            std::f64::consts::FRAC_PI_2,
            Isometry3::identity(),
            0.5,
            60.0,
        )
        .unwrap();
        // Ground 1.5 m below the camera (camera y points down), receding to
        // the horizon.
        let ground = sdf::half_space(-Vector3::y(), -1.5);

        let uniform = marching_cubes_uniform(
            &ground,
            Point3::new(-64.0, 1.04, 1.0),
            Point3::new(64.0, 2.04, 60.0),
            [256, 2, 118],
        )
        .unwrap();
        let fb_uniform = rasterize(&uniform, &camera);
        let s_uniform = face_pixel_stats(&fb_uniform, &uniform);

        let grid = SphericalGrid::default();
        let adaptive = spherical_marching_cubes(&ground, &camera, &grid, 8.0).unwrap();
        let fb_adaptive = rasterize(&adaptive.visible, &camera);
        let s_adaptive = face_pixel_stats(&fb_adaptive, &adaptive.visible);

        assert!(s_uniform.face_ids.len() > 100);
        assert!(s_adaptive.face_ids.len() > 100);

        // Pixel coverage: the uniform grid wastes huge faces up close and
        // sub-pixel slivers far away; the view-adaptive mesh keeps coverage
        // within a narrow band.
        let px_ratio_uniform = s_uniform.pixel_quantiles[4] / s_uniform.pixel_quantiles[2];
        let px_ratio_adaptive = s_adaptive.pixel_quantiles[4] / s_adaptive.pixel_quantiles[2];
        assert!(
            px_ratio_uniform > 10.0 * px_ratio_adaptive,
            "max/median pixels: uniform {px_ratio_uniform}, adaptive {px_ratio_adaptive}"
        );

        // World area: the trade runs the other way.
        let area_ratio_uniform = s_uniform.area_quantiles[4] / s_uniform.area_quantiles[0];
        let area_ratio_adaptive = s_adaptive.area_quantiles[4] / s_adaptive.area_quantiles[0];
        assert!(
            area_ratio_uniform < 1.001,
            "uniform grid areas should be congruent, ratio {area_ratio_uniform}"
        );
        assert!(
            area_ratio_adaptive > 50.0,
            "adaptive areas should grow with distance, ratio {area_ratio_adaptive}"
        );
    }
}
