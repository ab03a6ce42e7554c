//! Occlusion boundaries: pixels where the depth map jumps in a way the
//! local surface itself cannot explain.

use nalgebra::{Point3, Vector3};

use super::FrameBuffer;
use crate::mesh::Mesh;
use crate::meshing::CameraModel;

/// How much tighter the test is across an instance change: two different
/// objects only need a gap this fraction of the same-object threshold.
const INSTANCE_GAP_FACTOR: f64 = 0.1;

struct FacePlanes {
    /// (normal, normal · point) per face, camera space.
    planes: Vec<(Vector3<f64>, f64)>,
}

impl FacePlanes {
    fn new(mesh: &Mesh, camera: &CameraModel) -> FacePlanes {
        let points: Vec<Point3<f64>> =
            mesh.positions.iter().map(|p| camera.pose * p).collect();
        let planes = mesh
            .faces
            .iter()
            .map(|&[ia, ib, ic]| {
                let a = points[ia as usize];
                let n = (points[ib as usize] - a).cross(&(points[ic as usize] - a));
                (n, n.dot(&a.coords))
            })
            .collect();
        FacePlanes { planes }
    }

    /// Along-ray distance where `dir` meets the face's supporting plane;
    /// None when the ray runs parallel to it.
    fn predict(&self, face: u32, dir: Vector3<f64>) -> Option<f64> {
        let (n, offset) = self.planes[face as usize];
        let denom = n.dot(&dir);
        if denom.abs() < 1e-16 {
            return None;
        }
        Some(offset / denom)
    }
}

/// Mark pixels whose 4-neighborhood shows a depth step the pixel's own
/// surface cannot account for. For each neighbor, the depth the pixel's face
/// plane predicts along the neighbor's ray is compared against the neighbor's
/// actual depth: a relative mismatch above `tau_rel` marks the pixel, as does
/// a mismatch above `tau_rel`/10 across an instance change, or a neighbor
/// that hits nothing at all. Smooth interiors and coplanar seams stay
/// unmarked because the plane prediction absorbs perspective slope exactly.
/// `tau_rel` = 0.03 is a good default.
pub fn occlusion_boundaries(
    fb: &FrameBuffer,
    mesh: &Mesh,
    camera: &CameraModel,
    tau_rel: f64,
) -> Vec<bool> {
    let planes = FacePlanes::new(mesh, camera);
    let (w, h) = (fb.width, fb.height);
    let mut mask = vec![false; fb.len()];
    for iy in 0..h {
        for ix in 0..w {
            let i = fb.index(ix, iy);
            if !fb.is_hit(i) {
                continue;
            }
            let neighbors = [
                (ix.wrapping_sub(1), iy),
                (ix + 1, iy),
                (ix, iy.wrapping_sub(1)),
                (ix, iy + 1),
            ];
            'neighbors: for (nx, ny) in neighbors {
                if nx >= w || ny >= h {
                    continue;
                }
                let j = fb.index(nx, ny);
                if !fb.is_hit(j) {
                    mask[i] = true;
                    break 'neighbors;
                }
                let dir = camera.dir_camera(nx as f64 + 0.5, ny as f64 + 0.5);
                let gap = match planes.predict(fb.face[i], dir) {
                    Some(predicted) => (fb.depth[j] - predicted).abs(),
                    None => f64::INFINITY,
                };
                let mut limit = tau_rel * fb.depth[i];
                if fb.instance[j] != fb.instance[i] {
                    limit *= INSTANCE_GAP_FACTOR;
                }
                if gap > limit {
                    mask[i] = true;
                    break 'neighbors;
                }
            }
        }
    }
    mask
}
