//! Camera-space surface normals recovered from the depth layer alone.
//!
//! Each pixel gets a total-least-squares plane fitted to the unprojected
//! depth samples around it. The neighborhood is grown by flood fill so that
//! occlusion boundaries fence the fit: samples from a surface on the far
//! side of a depth step never contaminate the plane.

use std::collections::VecDeque;

use nalgebra::{Matrix3, Vector3};

use super::FrameBuffer;
use crate::meshing::CameraModel;

/// Fit a camera-space unit normal per pixel from depth. The sample set is
/// flood-filled out to `radius` (Chebyshev) through 4-connected hit pixels,
/// stopping at `boundary` pixels so the fit never straddles a depth step;
/// the center pixel itself participates even when marked. Pixels with fewer
/// than three reachable samples give None. Normals are oriented toward the
/// camera.
pub fn normals_from_depth(
    fb: &FrameBuffer,
    camera: &CameraModel,
    boundary: &[bool],
    radius: u32,
) -> Vec<Option<Vector3<f64>>> {
    assert_eq!(boundary.len(), fb.len(), "boundary mask size mismatch");
    let side = (2 * radius + 1) as usize;
    let r = radius as i64;
    let (w, h) = (fb.width as i64, fb.height as i64);
    let mut normals = vec![None; fb.len()];
    let mut visited = vec![false; side * side];
    let mut queue = VecDeque::new();
    let mut samples: Vec<Vector3<f64>> = Vec::with_capacity(side * side);

    for cy in 0..h {
        for cx in 0..w {
            let center = fb.index(cx as u32, cy as u32);
            if !fb.is_hit(center) {
                continue;
            }
            visited.fill(false);
            queue.clear();
            samples.clear();

            let local = |x: i64, y: i64| -> usize {
                ((y - (cy - r)) * side as i64 + (x - (cx - r))) as usize
            };
            visited[local(cx, cy)] = true;
            queue.push_back((cx, cy));
            while let Some((x, y)) = queue.pop_front() {
                let i = fb.index(x as u32, y as u32);
                let dir = camera.dir_camera(x as f64 + 0.5, y as f64 + 0.5);
                samples.push(dir * fb.depth[i]);
                for (nx, ny) in [(x - 1, y), (x + 1, y), (x, y - 1), (x, y + 1)] {
                    if (nx - cx).abs() > r || (ny - cy).abs() > r {
                        continue;
                    }
                    if nx < 0 || nx >= w || ny < 0 || ny >= h {
                        continue;
                    }
                    if visited[local(nx, ny)] {
                        continue;
                    }
                    let j = fb.index(nx as u32, ny as u32);
                    if !fb.is_hit(j) || boundary[j] {
                        continue;
                    }
                    visited[local(nx, ny)] = true;
                    queue.push_back((nx, ny));
                }
            }

            if samples.len() < 3 {
                continue;
            }
            let centroid = samples.iter().sum::<Vector3<f64>>() / samples.len() as f64;
            let mut cov = Matrix3::zeros();
            for s in &samples {
                let d = s - centroid;
                cov += d * d.transpose();
            }
            let eigen = cov.symmetric_eigen();
            let mut k = 0;
            for i in 1..3 {
                if eigen.eigenvalues[i] < eigen.eigenvalues[k] {
                    k = i;
                }
            }
            let mut n = eigen.eigenvectors.column(k).into_owned();
            if n.dot(&centroid) > 0.0 {
                n = -n;
            }
            normals[center] = Some(n);
        }
    }
    normals
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::sdf;
    use crate::groundtruth::{occlusion_boundaries, rasterize};
    use crate::mesh::Mesh;
    use crate::meshing::marching_cubes_uniform;
    use nalgebra::{Isometry3, Point3};

    fn straight_camera(width: u32, height: u32) -> CameraModel {
        CameraModel::new(
            width,
            height,
            std::f64::consts::FRAC_PI_2,
            Isometry3::identity(),
            0.1,
            100.0,
        )
        .unwrap()
    }

    fn quad(corners: [Point3<f64>; 4], instance: u32) -> Mesh {
        let mut mesh = Mesh::default();
        mesh.positions = corners.to_vec();
        mesh.faces = vec![[0, 1, 2], [0, 2, 3]];
        mesh.face_instance = vec![instance; 2];
        mesh
    }

    #[test]
    fn fronto_parallel_wall_gives_minus_z_everywhere() {
        let camera = straight_camera(64, 64);
        let mesh = quad(
            [
                Point3::new(-400.0, -400.0, 5.0),
                Point3::new(400.0, -400.0, 5.0),
                Point3::new(400.0, 400.0, 5.0),
                Point3::new(-400.0, 400.0, 5.0),
            ],
            0,
        );
        let fb = rasterize(&mesh, &camera);
        let normals = normals_from_depth(&fb, &camera, &vec![false; fb.len()], 2);
        for n in &normals {
            let n = n.expect("every wall pixel should get a normal");
            assert!((n - Vector3::new(0.0, 0.0, -1.0)).norm() < 1e-6, "normal {n:?}");
        }
    }

    #[test]
    fn tilted_plane_normal_matches_its_slope() {
        // Plane z = 5 + y: unit normal facing the camera is (0, 1, -1)/sqrt(2).
        let camera = straight_camera(64, 64);
        let mesh = quad(
            [
                Point3::new(-400.0, -3.0, 2.0),
                Point3::new(400.0, -3.0, 2.0),
                Point3::new(400.0, 3.0, 8.0),
                Point3::new(-400.0, 3.0, 8.0),
            ],
            0,
        );
        let fb = rasterize(&mesh, &camera);
        let mask = occlusion_boundaries(&fb, &mesh, &camera, 0.03);
        let normals = normals_from_depth(&fb, &camera, &mask, 2);
        let expected = Vector3::new(0.0, 1.0, -1.0) / 2.0f64.sqrt();
        let max_angle = 0.5f64.to_radians();
        for iy in 4..40u32 {
            for ix in 4..60u32 {
                let i = fb.index(ix, iy);
                assert!(fb.is_hit(i), "pixel ({ix}, {iy}) should be on the plane");
                let n = normals[i].expect("interior pixel should get a normal");
                let angle = n.dot(&expected).clamp(-1.0, 1.0).acos();
                assert!(angle < max_angle, "({ix}, {iy}): {angle} rad off, n = {n:?}");
            }
        }
    }

    #[test]
    fn isolated_speck_has_no_normal() {
        let camera = straight_camera(64, 64);
        // A triangle small enough to own a single pixel, floating far in
        // front of a backdrop. Its flood region is just itself: no fit.
        let mut mesh = quad(
            [
                Point3::new(-400.0, -400.0, 20.0),
                Point3::new(400.0, -400.0, 20.0),
                Point3::new(400.0, 400.0, 20.0),
                Point3::new(-400.0, 400.0, 20.0),
            ],
            0,
        );
        let mut speck = Mesh::default();
        speck.positions = vec![
            Point3::new(0.006, 0.011, 2.0),
            Point3::new(0.056, 0.011, 2.0),
            Point3::new(0.031, 0.056, 2.0),
        ];
        speck.faces = vec![[0, 1, 2]];
        speck.face_instance = vec![1];
        mesh.merge(&speck);

        let fb = rasterize(&mesh, &camera);
        let speck_px = fb.index(32, 32);
        assert_eq!(fb.instance[speck_px], 1, "speck should cover its pixel");
        assert_eq!(
            fb.instance.iter().filter(|&&i| i == 1).count(),
            1,
            "speck should cover exactly one pixel"
        );
        let mask = occlusion_boundaries(&fb, &mesh, &camera, 0.03);
        let normals = normals_from_depth(&fb, &camera, &mask, 2);
        assert!(normals[speck_px].is_none(), "one sample cannot define a plane");
        let far_px = fb.index(10, 10);
        let n = normals[far_px].expect("backdrop interior should fit fine");
        assert!((n - Vector3::new(0.0, 0.0, -1.0)).norm() < 1e-6);
    }

    #[test]
    fn sphere_normals_track_the_analytic_field() {
        let camera = straight_camera(256, 256);
        let center = Point3::new(0.0, 0.0, 5.0);
        let program = sdf::sphere(center, 1.5);
        let mut mesh = marching_cubes_uniform(
            &program,
            Point3::new(-1.875, -1.875, 3.125),
            Point3::new(1.875, 1.875, 6.875),
            [80, 80, 80],
        )
        .unwrap();
        mesh.set_instance(1);
        let fb = rasterize(&mesh, &camera);
        let mask = occlusion_boundaries(&fb, &mesh, &camera, 0.03);
        let radius = 2u32;
        let normals = normals_from_depth(&fb, &camera, &mask, radius);

        let interior = |ix: u32, iy: u32| -> bool {
            for dy in -(radius as i64)..=radius as i64 {
                for dx in -(radius as i64)..=radius as i64 {
                    let (x, y) = (ix as i64 + dx, iy as i64 + dy);
                    if x < 0 || x >= 256 || y < 0 || y >= 256 {
                        return false;
                    }
                    let j = fb.index(x as u32, y as u32);
                    if !fb.is_hit(j) || mask[j] {
                        return false;
                    }
                }
            }
            true
        };

        let mut angles = Vec::new();
        for iy in 0..256u32 {
            for ix in 0..256u32 {
                let i = fb.index(ix, iy);
                if !fb.is_hit(i) || !interior(ix, iy) {
                    continue;
                }
                let n = normals[i].expect("interior sphere pixel should get a normal");
                let dir = camera.dir_camera(ix as f64 + 0.5, iy as f64 + 0.5);
                let p = Point3::origin() + dir * fb.depth[i];
                let analytic = (p - center).normalize();
                angles.push(n.dot(&analytic).clamp(-1.0, 1.0).acos());
            }
        }
        assert!(angles.len() > 2_000, "only {} interior pixels", angles.len());
        angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = angles[angles.len() / 2];
        assert!(
            median < 2.0f64.to_radians(),
            "median normal error {} deg",
            median.to_degrees()
        );
    }
}
