//! Label and correspondence layers derived from a rasterized frame:
//! regroupable instance segmentation, optical flow for a static scene seen
//! from two poses, and stereo disparity for a rectified rig.

use std::collections::HashMap;

use nalgebra::Point3;

use super::{FrameBuffer, MISS};
use crate::meshing::CameraModel;

/// Per-pixel labels after regrouping instance ids. Ids missing from
/// `grouping` keep their own value, so an empty map reproduces the raw
/// instance layer; misses stay [`MISS`].
pub fn instance_segmentation(fb: &FrameBuffer, grouping: &HashMap<u32, u32>) -> Vec<u32> {
    fb.instance
        .iter()
        .enumerate()
        .map(|(i, &id)| {
            if !fb.is_hit(i) {
                return MISS;
            }
            *grouping.get(&id).unwrap_or(&id)
        })
        .collect()
}

/// Screen-space motion of each pixel of `fb1` (rendered from `cam1`) when
/// the same static scene is viewed from `cam2`: the hit point is unprojected
/// with the stored depth, reprojected through `cam2`, and the flow is the
/// difference of continuous screen positions. None on miss or when the point
/// falls behind the second camera.
pub fn flow_static(
    fb1: &FrameBuffer,
    cam1: &CameraModel,
    cam2: &CameraModel,
) -> Vec<Option<[f64; 2]>> {
    let to_world = cam1.camera_to_world();
    let mut out = Vec::with_capacity(fb1.len());
    for iy in 0..fb1.height {
        for ix in 0..fb1.width {
            let i = fb1.index(ix, iy);
            if !fb1.is_hit(i) {
                out.push(None);
                continue;
            }
            let (sx, sy) = (ix as f64 + 0.5, iy as f64 + 0.5);
            let p_cam = Point3::from(cam1.dir_camera(sx, sy) * fb1.depth[i]);
            let p_world = to_world * p_cam;
            out.push(cam2.project_world(p_world).map(|(sx2, sy2, _)| [sx2 - sx, sy2 - sy]));
        }
    }
    out
}

/// Stereo disparity in pixels for the left frame of a rectified rig:
/// f · baseline / z. Misses get 0.
pub fn disparity(fb: &FrameBuffer, rig: &(CameraModel, CameraModel)) -> Vec<f64> {
    let baseline = (rig.1.position() - rig.0.position()).norm();
    let f = rig.0.f_px();
    fb.z_depth(&rig.0)
        .iter()
        .enumerate()
        .map(|(i, &z)| if fb.is_hit(i) { f * baseline / z } else { 0.0 })
        .collect()
}
