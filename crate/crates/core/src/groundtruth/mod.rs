//! Geometry-exact ground truth from a software rasterizer: per-pixel depth,
//! face and instance ids, and barycentrics, plus layers derived from them —
//! occlusion boundaries, plane-fit normals, segmentation, static-scene
//! optical flow, stereo disparity, and per-face resolution statistics.
//!
//! Rasterization casts the exact pixel-center ray against every triangle
//! whose screen bounds cover the pixel, so the result is what an ideal
//! ray caster would produce: no shading, no sampling, no GPU variance.
//! Everything is plain `f64` arithmetic and bit-reproducible; row bands
//! rasterize on separate threads into disjoint slices, so thread count
//! never changes the output.

pub mod layers;
pub mod normals;
pub mod occlusion;
pub mod stats;

pub use layers::{disparity, flow_static, instance_segmentation};
pub use normals::normals_from_depth;
pub use occlusion::occlusion_boundaries;
pub use stats::{face_pixel_stats, FaceStats};

use nalgebra::{Point3, Vector3};

use crate::mesh::Mesh;
use crate::meshing::CameraModel;

/// Sentinel for pixels that hit nothing.
pub const MISS: u32 = u32::MAX;

/// Per-pixel geometry record produced by [`rasterize`].
///
/// `depth` is the euclidean distance along the pixel ray; convert with
/// [`FrameBuffer::z_depth`] when perpendicular depth is needed. Layers are
/// row-major with pixel (0, 0) at the top left.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameBuffer {
    pub width: u32,
    pub height: u32,
    /// Along-ray distance in meters, `f64::INFINITY` on miss.
    pub depth: Vec<f64>,
    /// Face index into the rasterized mesh, [`MISS`] on miss.
    pub face: Vec<u32>,
    /// Instance id of the hit face, [`MISS`] on miss.
    pub instance: Vec<u32>,
    /// Barycentric coordinates of the hit, ordered like the face's vertices.
    pub barycentric: Vec<[f64; 3]>,
}

impl FrameBuffer {
    pub fn empty(width: u32, height: u32) -> FrameBuffer {
        let n = (width as usize) * (height as usize);
        FrameBuffer {
            width,
            height,
            depth: vec![f64::INFINITY; n],
            face: vec![MISS; n],
            instance: vec![MISS; n],
            barycentric: vec![[0.0; 3]; n],
        }
    }

    pub fn len(&self) -> usize {
        (self.width as usize) * (self.height as usize)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, ix: u32, iy: u32) -> usize {
        (iy * self.width + ix) as usize
    }

    pub fn is_hit(&self, i: usize) -> bool {
        self.face[i] != MISS
    }

    /// Perpendicular (camera z) depth per pixel, `f64::INFINITY` on miss.
    /// `camera` must be the camera this buffer was rasterized with.
    pub fn z_depth(&self, camera: &CameraModel) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for iy in 0..self.height {
            for ix in 0..self.width {
                let i = self.index(ix, iy);
                if self.is_hit(i) {
                    let dz = camera.dir_camera(ix as f64 + 0.5, iy as f64 + 0.5).z;
                    out.push(self.depth[i] * dz);
                } else {
                    out.push(f64::INFINITY);
                }
            }
        }
        out
    }
}

/// Slack on barycentric bounds so pixels on shared edges register in at
/// least one of the two triangles instead of falling through a crack.
const EDGE_SLACK: f64 = 1e-12;

/// Ray from the origin against one triangle, in the same frame as the
/// vertices. Returns (distance, u, v) with u, v barycentric toward b and c.
pub(crate) fn ray_triangle(
    dir: Vector3<f64>,
    a: Point3<f64>,
    b: Point3<f64>,
    c: Point3<f64>,
) -> Option<(f64, f64, f64)> {
    let e1 = b - a;
    let e2 = c - a;
    let pv = dir.cross(&e2);
    let det = e1.dot(&pv);
    if det.abs() < 1e-16 {
        return None;
    }
    let inv = 1.0 / det;
    let tv = -a.coords;
    let u = tv.dot(&pv) * inv;
    if !(-EDGE_SLACK..=1.0 + EDGE_SLACK).contains(&u) {
        return None;
    }
    let qv = tv.cross(&e1);
    let v = dir.dot(&qv) * inv;
    if v < -EDGE_SLACK || u + v > 1.0 + EDGE_SLACK {
        return None;
    }
    let t = e2.dot(&qv) * inv;
    (t > 0.0).then_some((t, u, v))
}

struct FaceBounds {
    ix0: u32,
    ix1: u32,
    iy0: u32,
    iy1: u32,
}

/// Pixel-center coverage bounds of a camera-space triangle. Triangles with a
/// vertex at or behind the camera plane get conservative full-width bounds.
fn face_bounds(
    a: Point3<f64>,
    b: Point3<f64>,
    c: Point3<f64>,
    camera: &CameraModel,
) -> Option<FaceBounds> {
    let (w, h) = (camera.width, camera.height);
    let (mut min_x, mut max_x) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut min_y, mut max_y) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut conservative = false;
    for p in [a, b, c] {
        match camera.project_camera(p) {
            Some((sx, sy, _)) => {
                min_x = min_x.min(sx);
                max_x = max_x.max(sx);
                min_y = min_y.min(sy);
                max_y = max_y.max(sy);
            }
            None => conservative = true,
        }
    }
    if conservative {
        return Some(FaceBounds { ix0: 0, ix1: w - 1, iy0: 0, iy1: h - 1 });
    }
    // Pixel centers sit at ix + 0.5; keep pixels whose center is inside.
    let ix0 = (min_x - 0.5).ceil().max(0.0);
    let ix1 = (max_x - 0.5).floor().min(w as f64 - 1.0);
    let iy0 = (min_y - 0.5).ceil().max(0.0);
    let iy1 = (max_y - 0.5).floor().min(h as f64 - 1.0);
    if ix0 > ix1 || iy0 > iy1 {
        return None;
    }
    Some(FaceBounds { ix0: ix0 as u32, ix1: ix1 as u32, iy0: iy0 as u32, iy1: iy1 as u32 })
}

struct BandOutput<'a> {
    depth: &'a mut [f64],
    face: &'a mut [u32],
    instance: &'a mut [u32],
    barycentric: &'a mut [[f64; 3]],
}

#[allow(clippy::too_many_arguments)]
fn rasterize_band(
    mesh: &Mesh,
    camera: &CameraModel,
    points: &[Point3<f64>],
    bounds: &[Option<FaceBounds>],
    bin: &[u32],
    row0: u32,
    rows: u32,
    out: &mut BandOutput,
) {
    let width = camera.width;
    for &fi in bin {
        let fb = bounds[fi as usize].as_ref().expect("binned faces have bounds");
        let [ia, ib, ic] = mesh.faces[fi as usize];
        let (a, b, c) =
            (points[ia as usize], points[ib as usize], points[ic as usize]);
        let instance = mesh.face_instance[fi as usize];
        let iy_lo = fb.iy0.max(row0);
        let iy_hi = fb.iy1.min(row0 + rows - 1);
        for iy in iy_lo..=iy_hi {
            for ix in fb.ix0..=fb.ix1 {
                let dir = camera.dir_camera(ix as f64 + 0.5, iy as f64 + 0.5);
                let Some((t, u, v)) = ray_triangle(dir, a, b, c) else {
                    continue;
                };
                let z = t * dir.z;
                if z < camera.near || z > camera.far {
                    continue;
                }
                let i = ((iy - row0) * width + ix) as usize;
                if t < out.depth[i] || (t == out.depth[i] && fi < out.face[i]) {
                    out.depth[i] = t;
                    out.face[i] = fi;
                    out.instance[i] = instance;
                    out.barycentric[i] = [1.0 - u - v, u, v];
                }
            }
        }
    }
}

/// Z-buffered rasterization of `mesh` through `camera` at pixel centers.
/// The nearest surface wins; exact depth ties go to the lower face index, so
/// the result is independent of face order. Row bands run on separate
/// threads writing disjoint output, keeping the image independent of thread
/// count as well.
pub fn rasterize(mesh: &Mesh, camera: &CameraModel) -> FrameBuffer {
    let mut fb = FrameBuffer::empty(camera.width, camera.height);
    if mesh.faces.is_empty() || fb.is_empty() {
        return fb;
    }

    let points: Vec<Point3<f64>> = mesh.positions.iter().map(|p| camera.pose * p).collect();
    let mut bounds = Vec::with_capacity(mesh.faces.len());
    for face in &mesh.faces {
        let (a, b, c) = (
            points[face[0] as usize],
            points[face[1] as usize],
            points[face[2] as usize],
        );
        let z_min = a.z.min(b.z).min(c.z);
        let z_max = a.z.max(b.z).max(c.z);
        if z_max < camera.near || z_min > camera.far {
            bounds.push(None);
            continue;
        }
        bounds.push(face_bounds(a, b, c, camera));
    }

    let height = camera.height as usize;
    let threads = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let band_rows = height.div_ceil(threads).max(16).min(height);
    let band_count = height.div_ceil(band_rows);

    let mut bins: Vec<Vec<u32>> = vec![Vec::new(); band_count];
    for (fi, fb_bounds) in bounds.iter().enumerate() {
        if let Some(fb_bounds) = fb_bounds {
            let first = fb_bounds.iy0 as usize / band_rows;
            let last = fb_bounds.iy1 as usize / band_rows;
            for bin in &mut bins[first..=last] {
                bin.push(fi as u32);
            }
        }
    }

    let band_px = band_rows * camera.width as usize;
    std::thread::scope(|scope| {
        let depth_chunks = fb.depth.chunks_mut(band_px);
        let face_chunks = fb.face.chunks_mut(band_px);
        let instance_chunks = fb.instance.chunks_mut(band_px);
        let bary_chunks = fb.barycentric.chunks_mut(band_px);
        let chunks = depth_chunks.zip(face_chunks).zip(instance_chunks).zip(bary_chunks);
        for (band, (((depth, face), instance), barycentric)) in chunks.enumerate() {
            let bin = &bins[band];
            let points = &points;
            let bounds = &bounds;
            let row0 = (band * band_rows) as u32;
            let rows = (depth.len() / camera.width as usize) as u32;
            let mut out = BandOutput { depth, face, instance, barycentric };
            scope.spawn(move || {
                rasterize_band(mesh, camera, points, bounds, bin, row0, rows, &mut out);
            });
        }
    });
    fb
}
