//! Camera-centric marching cubes on a spherical lattice.
//!
//! The lattice is uniform in azimuth θ, elevation φ, and log-radius around
//! the camera, so world-space cell size grows linearly with distance and the
//! projected size of mesh edges stays near a fixed pixel target everywhere
//! in the image. Extraction runs in four passes: a low-resolution field
//! tensor over block corners, a per-pixel front-to-back search for the
//! nearest block whose span contains a sign change (ties resolved toward
//! smaller radius, with a conservative ray-marched fallback for features
//! the low-resolution pass misses), fine marching cubes inside the selected
//! blocks on one globally aligned lattice (so block seams share vertices
//! exactly), and a coarse pass over the remaining sign-change blocks for
//! out-of-view geometry, kept as a separately tagged mesh.

use std::collections::BTreeSet;
use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::{Isometry3, Point3};
use serde::{Deserialize, Serialize};

use super::{march_cell, CameraModel, EdgeWelder, MeshingError};
use crate::fields::{Evaluator, FieldProgram, ValueType};
use crate::mesh::Mesh;

/// Block counts of the spherical lattice: θ spans the full turn, φ the
/// half-turn between the poles, and r the camera's depth range with
/// logarithmic spacing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SphericalGrid {
    pub theta_blocks: usize,
    pub phi_blocks: usize,
    pub r_blocks: usize,
}

impl Default for SphericalGrid {
    fn default() -> Self {
        SphericalGrid { theta_blocks: 64, phi_blocks: 64, r_blocks: 128 }
    }
}

impl SphericalGrid {
    pub fn new(theta_blocks: usize, phi_blocks: usize, r_blocks: usize) -> Result<Self, MeshingError> {
        if theta_blocks == 0 || phi_blocks == 0 || r_blocks == 0 {
            return Err(MeshingError::InvalidGrid("block counts must be at least 1".into()));
        }
        Ok(SphericalGrid { theta_blocks, phi_blocks, r_blocks })
    }

    /// Radial block boundaries between `near` and `far`; consecutive
    /// boundaries keep a constant ratio (far/near)^(1/R).
    pub fn r_boundaries(&self, near: f64, far: f64) -> Vec<f64> {
        let lnr0 = near.ln();
        let step = (far / near).ln() / self.r_blocks as f64;
        (0..=self.r_blocks).map(|k| (lnr0 + k as f64 * step).exp()).collect()
    }
}

/// World-space edge length that projects to `target_px` pixels at `depth`.
pub fn target_edge_length(depth: f64, camera: &CameraModel, target_px: f64) -> f64 {
    depth * (camera.vfov / camera.height as f64) * target_px
}

/// Meshes extracted around one camera. Pixels see `visible`; `out_of_view`
/// holds the coarse hull of everything else that crossed zero.
#[derive(Debug, Clone)]
pub struct SphericalMeshes {
    pub visible: Mesh,
    pub out_of_view: Mesh,
    pub warnings: Vec<String>,
    /// Blocks selected by the per-pixel search, sorted by (θ, φ, r) index.
    pub visible_blocks: Vec<(u32, u32, u32)>,
    /// Fine cells that produced triangles.
    pub meshed_cells: u64,
}

struct Lattice {
    cam_to_world: Isometry3<f64>,
    /// Fine cells per block along θ, φ, r.
    ct: usize,
    cp: usize,
    cr: usize,
    dtheta: f64,
    dphi: f64,
    dlnr: f64,
    lnr0: f64,
}

impl Lattice {
    fn new(camera: &CameraModel, grid: &SphericalGrid, target_px: f64) -> Result<Self, MeshingError> {
        let step = (camera.vfov / camera.height as f64) * target_px;
        let block_theta = TAU / grid.theta_blocks as f64;
        let block_phi = PI / grid.phi_blocks as f64;
        let block_lnr = (camera.far / camera.near).ln() / grid.r_blocks as f64;
        let cells = |extent: f64| ((extent / step).ceil() as usize).max(1);
        let (ct, cp, cr) = (cells(block_theta), cells(block_phi), cells(block_lnr));
        if ct.max(cp).max(cr) > 4096 {
            return Err(MeshingError::InvalidGrid(format!(
                "target of {target_px} px needs {ct}x{cp}x{cr} cells per block; \
                 use more blocks or a coarser target"
            )));
        }
        Ok(Lattice {
            cam_to_world: camera.camera_to_world(),
            ct,
            cp,
            cr,
            dtheta: block_theta / ct as f64,
            dphi: block_phi / cp as f64,
            dlnr: block_lnr / cr as f64,
            lnr0: camera.near.ln(),
        })
    }

    fn angles(&self, gi: usize, gj: usize, gk: usize) -> (f64, f64, f64) {
        (
            -PI + gi as f64 * self.dtheta,
            -FRAC_PI_2 + gj as f64 * self.dphi,
            (self.lnr0 + gk as f64 * self.dlnr).exp(),
        )
    }

    /// World position of a fine lattice point, from global indices.
    fn fine_position(&self, gi: usize, gj: usize, gk: usize) -> Point3<f64> {
        let (theta, phi, r) = self.angles(gi, gj, gk);
        self.spherical_to_world(theta.sin_cos(), phi.sin_cos(), r)
    }

    fn spherical_to_world(&self, (st, ct): (f64, f64), (sp, cp): (f64, f64), r: f64) -> Point3<f64> {
        let dir = nalgebra::Vector3::new(cp * st, sp, cp * ct);
        self.cam_to_world * Point3::from(dir * r)
    }

    fn block_corner(&self, i: usize, j: usize, k: usize) -> Point3<f64> {
        self.fine_position(i * self.ct, j * self.cp, k * self.cr)
    }
}

pub fn spherical_marching_cubes(
    sdf: &FieldProgram,
    camera: &CameraModel,
    grid: &SphericalGrid,
    target_px: f64,
) -> Result<SphericalMeshes, MeshingError> {
    if sdf.output_type() != ValueType::Scalar {
        return Err(MeshingError::VectorField);
    }
    if !(target_px > 0.0 && target_px.is_finite()) {
        return Err(MeshingError::InvalidGrid(format!("target pixel size {target_px} must be positive")));
    }
    let lat = Lattice::new(camera, grid, target_px)?;
    let (m, n, r) = (grid.theta_blocks, grid.phi_blocks, grid.r_blocks);
    let mut eval = Evaluator::new(sdf);

    // Low-resolution pass: the field at every block corner.
    let cidx = move |i: usize, j: usize, k: usize| (k * (n + 1) + j) * (m + 1) + i;
    let mut coarse = vec![0.0; (m + 1) * (n + 1) * (r + 1)];
    for k in 0..=r {
        for j in 0..=n {
            for i in 0..=m {
                coarse[cidx(i, j, k)] = eval.eval_scalar(lat.block_corner(i, j, k));
            }
        }
    }

    let bidx = move |i: usize, j: usize, k: usize| (k * n + j) * m + i;
    let mut crossing = vec![false; m * n * r];
    for k in 0..r {
        for j in 0..n {
            for i in 0..m {
                let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                for (di, dj, dk) in CORNERS {
                    let v = coarse[cidx(i + di, j + dj, k + dk)];
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                crossing[bidx(i, j, k)] = lo <= 0.0 && hi >= 0.0;
            }
        }
    }

    // Per-pixel search for the nearest block containing a sign change along
    // the pixel's ray. The ray keeps a fixed (θ, φ), so only radius moves;
    // candidate radial runs come from the low-resolution pass (padded one
    // block each way) and are densely re-sampled at the fine radial step.
    // Pixels left without a crossing get a second, conservative
    // sphere-tracing sweep so features thinner than a block still make it
    // into the visible set.
    let cam_pos = camera.position();
    let cam_rot = lat.cam_to_world.rotation;
    let block_lnr = lat.dlnr * lat.cr as f64;
    let mut visible: BTreeSet<(usize, usize, usize)> = BTreeSet::new();
    for py in 0..camera.height {
        for px in 0..camera.width {
            let dir_cam = camera.dir_camera(px as f64 + 0.5, py as f64 + 0.5);
            let theta = dir_cam.x.atan2(dir_cam.z);
            let phi = dir_cam.y.atan2(dir_cam.x.hypot(dir_cam.z));
            let bi = (((theta + PI) / (TAU / m as f64)) as usize).min(m - 1);
            let bj = (((phi + FRAC_PI_2) / (PI / n as f64)) as usize).min(n - 1);
            let dir_world = cam_rot * dir_cam;

            let candidate = |k: usize| {
                crossing[bidx(bi, bj, k)]
                    || (k > 0 && crossing[bidx(bi, bj, k - 1)])
                    || (k + 1 < r && crossing[bidx(bi, bj, k + 1)])
            };
            let mut found = false;
            let mut k = 0;
            'column: while k < r {
                if !candidate(k) {
                    k += 1;
                    continue;
                }
                let mut k_end = k;
                while k_end + 1 < r && candidate(k_end + 1) {
                    k_end += 1;
                }
                let (s0, s1) = (k * lat.cr, (k_end + 1) * lat.cr);
                for s in s0..=s1 {
                    let rad = (lat.lnr0 + s as f64 * lat.dlnr).exp();
                    let v = eval.eval_scalar(cam_pos + dir_world * rad);
                    if v <= 0.0 {
                        let cell = if s > s0 { s - 1 } else { s };
                        visible.insert((bi, bj, (cell / lat.cr).min(r - 1)));
                        found = true;
                        break 'column;
                    }
                }
                k = k_end + 1;
            }
            if !found {
                // Under-stepped sphere tracing tolerates fields that are
                // locally steeper than unit slope.
                let mut t = camera.near;
                for _ in 0..4096 {
                    if t >= camera.far {
                        break;
                    }
                    let d = eval.eval_scalar(cam_pos + dir_world * t);
                    if d <= 0.5 * t * lat.dlnr {
                        let kb = (((t / camera.near).ln() / block_lnr) as usize).min(r - 1);
                        visible.insert((bi, bj, kb));
                        break;
                    }
                    t += (0.35 * d).max(0.25 * t * lat.dlnr);
                }
            }
        }
    }

    let mut out = SphericalMeshes {
        visible: Mesh::new(),
        out_of_view: Mesh::new(),
        warnings: Vec::new(),
        visible_blocks: visible.iter().map(|&(i, j, k)| (i as u32, j as u32, k as u32)).collect(),
        meshed_cells: 0,
    };
    if visible.is_empty() {
        out.warnings.push("no zero crossing is visible from the camera; visible mesh is empty".into());
    }

    // High-resolution pass: fine marching cubes inside the selected blocks.
    // Lattice points are addressed globally, so neighboring blocks evaluate
    // shared boundary samples to identical values and weld seamlessly.
    let mut welder = EdgeWelder::new();
    let (pt, pp, pr) = (lat.ct + 1, lat.cp + 1, lat.cr + 1);
    let mut values = vec![0.0; pt * pp * pr];
    for &(bi, bj, bk) in &visible {
        let (g0, h0, l0) = (bi * lat.ct, bj * lat.cp, bk * lat.cr);
        let thetas: Vec<_> = (0..pt).map(|i| lat.angles(g0 + i, 0, 0).0.sin_cos()).collect();
        let phis: Vec<_> = (0..pp).map(|j| lat.angles(0, h0 + j, 0).1.sin_cos()).collect();
        let radii: Vec<_> = (0..pr).map(|k| lat.angles(0, 0, l0 + k).2).collect();
        for lk in 0..pr {
            for lj in 0..pp {
                for li in 0..pt {
                    values[(lk * pp + lj) * pt + li] =
                        eval.eval_scalar(lat.spherical_to_world(thetas[li], phis[lj], radii[lk]));
                }
            }
        }
        for lk in 0..lat.cr {
            for lj in 0..lat.cp {
                for li in 0..lat.ct {
                    let mut corner_values = [0.0; 8];
                    let mut corner_positions = [Point3::origin(); 8];
                    for (c, off) in super::tables::CORNER_OFFSETS.iter().enumerate() {
                        let (ci, cj, ck) = (li + off[0], lj + off[1], lk + off[2]);
                        corner_values[c] = values[(ck * pp + cj) * pt + ci];
                        corner_positions[c] =
                            lat.spherical_to_world(thetas[ci], phis[cj], radii[ck]);
                    }
                    if march_cell(
                        [(g0 + li) as i64, (h0 + lj) as i64, (l0 + lk) as i64],
                        &corner_positions,
                        &corner_values,
                        0.0,
                        &mut welder,
                        &mut out.visible,
                        0,
                    ) {
                        out.meshed_cells += 1;
                    }
                }
            }
        }
    }

    // Out-of-view pass: every remaining sign-change block, one cell each.
    let mut coarse_welder = EdgeWelder::new();
    for k in 0..r {
        for j in 0..n {
            for i in 0..m {
                if !crossing[bidx(i, j, k)] || visible.contains(&(i, j, k)) {
                    continue;
                }
                let mut corner_values = [0.0; 8];
                let mut corner_positions = [Point3::origin(); 8];
                for (c, (di, dj, dk)) in CORNERS.iter().enumerate() {
                    corner_values[c] = coarse[cidx(i + di, j + dj, k + dk)];
                    corner_positions[c] = lat.block_corner(i + di, j + dj, k + dk);
                }
                march_cell(
                    [i as i64, j as i64, k as i64],
                    &corner_positions,
                    &corner_values,
                    0.0,
                    &mut coarse_welder,
                    &mut out.out_of_view,
                    0,
                );
            }
        }
    }

    Ok(out)
}

/// Corner offsets in [`super::tables::CORNER_OFFSETS`] order as tuples.
const CORNERS: [(usize, usize, usize); 8] = [
    (0, 0, 0),
    (1, 0, 0),
    (1, 1, 0),
    (0, 1, 0),
    (0, 0, 1),
    (1, 0, 1),
    (1, 1, 1),
    (0, 1, 1),
];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{sdf, ProgramBuilder};
    use nalgebra::Vector3;

    fn camera(width: u32, height: u32, far: f64) -> CameraModel {
        CameraModel::new(width, height, std::f64::consts::FRAC_PI_4, Isometry3::identity(), 0.5, far)
            .unwrap()
    }

    fn ground_camera(width: u32, height: u32) -> CameraModel {
        let pose = CameraModel::look_at(
            Point3::new(0.0, 2.0, 0.0),
            Point3::new(0.0, 0.0, 4.0),
            Vector3::y(),
        )
        .unwrap();
        CameraModel::new(width, height, std::f64::consts::FRAC_PI_4, pose, 0.5, 60.0).unwrap()
    }

    fn ground_plane() -> crate::fields::FieldProgram {
        sdf::half_space(Vector3::y(), 0.0)
    }

    #[test]
    fn sphere_vertices_stay_within_one_local_cell() {
        let center = Point3::new(0.0, 0.0, 5.0);
        let prog = sdf::sphere(center, 1.0);
        let cam = camera(256, 144, 50.0);
        let grid = SphericalGrid::new(32, 32, 64).unwrap();
        let out = spherical_marching_cubes(&prog, &cam, &grid, 1.0).unwrap();
        assert!(!out.visible.is_empty());
        let lat = Lattice::new(&cam, &grid, 1.0).unwrap();
        for p in &out.visible.positions {
            let rad = (p - Point3::origin()).norm();
            let local = rad * lat.dtheta.max(lat.dphi).max(lat.dlnr.exp_m1());
            assert!(
                ((p - center).norm() - 1.0).abs() < local,
                "vertex {p:?} further than one cell from the sphere"
            );
        }
    }

    #[test]
    fn sign_free_field_yields_warning_and_empty_mesh() {
        let mut b = ProgramBuilder::new();
        let one = b.constant(1.0);
        let prog = b.finish(one);
        let cam = camera(64, 36, 20.0);
        let grid = SphericalGrid::new(8, 8, 16).unwrap();
        let out = spherical_marching_cubes(&prog, &cam, &grid, 4.0).unwrap();
        assert!(out.visible.is_empty());
        assert!(out.out_of_view.is_empty());
        assert_eq!(out.warnings.len(), 1);
    }

    #[test]
    fn ground_plane_edges_project_near_target() {
        let cam = ground_camera(128, 72);
        let grid = SphericalGrid::new(32, 32, 64).unwrap();
        let target = 2.0;
        let out = spherical_marching_cubes(&ground_plane(), &cam, &grid, target).unwrap();
        assert!(out.visible.face_count() > 200);

        let mut edges_px = Vec::new();
        let mut samples = Vec::new(); // (depth, log2 edge px)
        for f in 0..out.visible.face_count() {
            let [a, b, c] = out.visible.faces[f];
            let proj: Vec<_> = [a, b, c]
                .iter()
                .filter_map(|&v| cam.project_world(out.visible.positions[v as usize]))
                .collect();
            if proj.len() < 3 {
                continue;
            }
            let depth = (proj[0].2 + proj[1].2 + proj[2].2) / 3.0;
            for (u, v) in [(0, 1), (1, 2), (2, 0)] {
                let e = ((proj[u].0 - proj[v].0).powi(2) + (proj[u].1 - proj[v].1).powi(2)).sqrt();
                if e > 0.0 {
                    edges_px.push(e);
                    samples.push((depth, e.log2()));
                }
            }
        }
        edges_px.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let median = edges_px[edges_px.len() / 2];
        assert!(
            median >= 0.5 * target && median <= 2.0 * target,
            "median projected edge {median} px vs target {target} px"
        );

        // Projected edge size should hold steady across the depth range.
        samples.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        let decile = samples.len() / 10;
        let means: Vec<f64> = (0..10)
            .map(|d| {
                let chunk = &samples[d * decile..(d + 1) * decile];
                chunk.iter().map(|s| s.1).sum::<f64>() / chunk.len() as f64
            })
            .collect();
        let mean = means.iter().sum::<f64>() / means.len() as f64;
        let sd = (means.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / means.len() as f64).sqrt();
        assert!(sd < 1.0, "log2 projected edge varies {sd} octaves across depth deciles");
    }

    #[test]
    fn face_area_grows_with_squared_distance() {
        let cam = camera(256, 144, 100.0);
        let grid = SphericalGrid::new(32, 32, 64).unwrap();
        let mean_area = |dist: f64| {
            let prog = sdf::sphere(Point3::new(0.0, 0.0, dist), 1.0);
            let out = spherical_marching_cubes(&prog, &cam, &grid, 1.5).unwrap();
            assert!(!out.visible.is_empty(), "sphere at {dist} m missing");
            out.visible.total_area() / out.visible.face_count() as f64
        };
        let ratio = mean_area(50.0) / mean_area(5.0);
        assert!(
            (50.0..=200.0).contains(&ratio),
            "area ratio {ratio}, expected about 100"
        );
    }

    #[test]
    fn meshed_cell_count_scales_with_pixel_count() {
        let grid = SphericalGrid::new(32, 32, 64).unwrap();
        let cells = |w: u32, h: u32| {
            let out =
                spherical_marching_cubes(&ground_plane(), &ground_camera(w, h), &grid, 2.0).unwrap();
            out.meshed_cells as f64
        };
        let exponent = (cells(256, 144) / cells(128, 72)).ln() / 2.0f64.ln() / 2.0;
        assert!(
            (0.8..=1.2).contains(&exponent),
            "doubling resolution scaled cells by 2^{:.2} per axis",
            exponent * 2.0
        );
    }

    #[test]
    fn every_ray_hit_maps_to_a_selected_block() {
        let cam = ground_camera(128, 72);
        let grid = SphericalGrid::new(32, 32, 64).unwrap();
        let prog = ground_plane();
        let out = spherical_marching_cubes(&prog, &cam, &grid, 2.0).unwrap();
        let selected: std::collections::HashSet<_> = out.visible_blocks.iter().copied().collect();

        let mut eval = Evaluator::new(&prog);
        let (mut hits, mut misses) = (0u32, 0u32);
        for py in 0..cam.height {
            for px in 0..cam.width {
                let (origin, dir) = cam.pixel_ray(px, py);
                // Sphere tracing oracle; the field is a true distance bound.
                let mut t = cam.near;
                let mut hit = None;
                while t < cam.far {
                    let d = eval.eval_scalar(origin + dir * t);
                    if d < 1e-6 {
                        hit = Some(t);
                        break;
                    }
                    t += d.max(1e-4);
                }
                let Some(t) = hit else { continue };
                hits += 1;
                let dir_cam = cam.dir_camera(px as f64 + 0.5, py as f64 + 0.5);
                let theta = dir_cam.x.atan2(dir_cam.z);
                let phi = dir_cam.y.atan2(dir_cam.x.hypot(dir_cam.z));
                let bi = (((theta + PI) / (TAU / 32.0)) as u32).min(31);
                let bj = (((phi + FRAC_PI_2) / (PI / 32.0)) as u32).min(31);
                let bk = (((t / cam.near).ln() / ((cam.far / cam.near).ln() / 64.0)) as u32).min(63);
                let near_hit = (bk.saturating_sub(1)..=(bk + 1).min(63))
                    .any(|k| selected.contains(&(bi, bj, k)));
                if !near_hit {
                    misses += 1;
                }
            }
        }
        assert!(hits > 1000);
        assert!(
            (misses as f64) < 0.005 * hits as f64,
            "{misses} of {hits} hit pixels missing from the visible blocks"
        );
    }

    #[test]
    fn edge_length_formula() {
        let cam = CameraModel::new(
            1920,
            1080,
            std::f64::consts::FRAC_PI_3,
            Isometry3::identity(),
            0.1,
            500.0,
        )
        .unwrap();
        let e = target_edge_length(10.0, &cam, 1.0);
        assert!((e - 10.0 * std::f64::consts::FRAC_PI_3 / 1080.0).abs() < 1e-12);
        assert!((target_edge_length(20.0, &cam, 1.0) - 2.0 * e).abs() < 1e-12);
        assert_eq!(target_edge_length(10.0, &cam, 0.0), 0.0);
    }

    #[test]
    fn radial_boundaries_keep_constant_ratio() {
        let grid = SphericalGrid::new(4, 4, 10).unwrap();
        let bounds = grid.r_boundaries(0.5, 500.0);
        assert_eq!(bounds.len(), 11);
        assert!((bounds[0] - 0.5).abs() < 1e-12);
        assert!((bounds[10] - 500.0).abs() < 1e-9);
        let ratio = (500.0f64 / 0.5).powf(0.1);
        for w in bounds.windows(2) {
            assert!((w[1] / w[0] - ratio).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_invalid_grids() {
        assert!(SphericalGrid::new(0, 4, 4).is_err());
        let cam = camera(64, 36, 20.0);
        let grid = SphericalGrid::new(8, 8, 16).unwrap();
        let prog = ground_plane();
        assert!(spherical_marching_cubes(&prog, &cam, &grid, 0.0).is_err());
        assert!(spherical_marching_cubes(&prog, &cam, &grid, f64::NAN).is_err());
    }
}
