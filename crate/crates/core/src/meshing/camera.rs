//! Pinhole camera with a y-down, z-forward camera frame.
//!
//! Pixel (ix, iy) covers the unit square with corner (ix, iy); its center is
//! (ix + 0.5, iy + 0.5) in continuous screen coordinates. Projection and
//! ray generation are exact inverses under this convention.

use nalgebra::{Isometry3, Matrix3, Point3, Rotation3, Translation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use super::MeshingError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CameraModel {
    pub width: u32,
    pub height: u32,
    /// Vertical field of view, radians.
    pub vfov: f64,
    /// World → camera transform. Camera axes: x right, y down, z forward.
    pub pose: Isometry3<f64>,
    /// Closest considered depth, meters.
    pub near: f64,
    /// Farthest considered depth, meters.
    pub far: f64,
    /// Stereo baseline toward the right eye, meters.
    pub baseline: Option<f64>,
}

impl CameraModel {
    pub fn new(
        width: u32,
        height: u32,
        vfov: f64,
        pose: Isometry3<f64>,
        near: f64,
        far: f64,
    ) -> Result<Self, MeshingError> {
        if width == 0 || height == 0 {
            return Err(MeshingError::InvalidCamera(format!(
                "resolution {width}x{height} must be at least 1x1"
            )));
        }
        if !(vfov > 0.0 && vfov < std::f64::consts::PI) {
            return Err(MeshingError::InvalidCamera(format!(
                "vertical fov {vfov} outside (0, pi)"
            )));
        }
        if !(near > 0.0 && near < far && far.is_finite()) {
            return Err(MeshingError::InvalidCamera(format!(
                "depth range ({near}, {far}) must satisfy 0 < near < far"
            )));
        }
        Ok(CameraModel { width, height, vfov, pose, near, far, baseline: None })
    }

    pub fn with_baseline(mut self, baseline: f64) -> Result<Self, MeshingError> {
        if !(baseline > 0.0 && baseline.is_finite()) {
            return Err(MeshingError::InvalidCamera(format!(
                "baseline {baseline} must be positive"
            )));
        }
        self.baseline = Some(baseline);
        Ok(self)
    }

    /// Focal length in pixels.
    pub fn f_px(&self) -> f64 {
        (self.height as f64 / 2.0) / (self.vfov / 2.0).tan()
    }

    /// Horizontal field of view implied by the aspect ratio, radians.
    pub fn hfov(&self) -> f64 {
        let aspect = self.width as f64 / self.height as f64;
        2.0 * (aspect * (self.vfov / 2.0).tan()).atan()
    }

    pub fn camera_to_world(&self) -> Isometry3<f64> {
        self.pose.inverse()
    }

    /// Camera center in world coordinates.
    pub fn position(&self) -> Point3<f64> {
        self.pose.inverse_transform_point(&Point3::origin())
    }

    /// Unit direction in camera space through continuous screen point (sx, sy).
    pub fn dir_camera(&self, sx: f64, sy: f64) -> Vector3<f64> {
        let f = self.f_px();
        Vector3::new(
            (sx - self.width as f64 / 2.0) / f,
            (sy - self.height as f64 / 2.0) / f,
            1.0,
        )
        .normalize()
    }

    /// World-space ray through continuous screen point (sx, sy).
    pub fn ray_through(&self, sx: f64, sy: f64) -> (Point3<f64>, Vector3<f64>) {
        let dir = self.camera_to_world().rotation * self.dir_camera(sx, sy);
        (self.position(), dir)
    }

    /// World-space ray through the center of pixel (ix, iy).
    pub fn pixel_ray(&self, ix: u32, iy: u32) -> (Point3<f64>, Vector3<f64>) {
        self.ray_through(ix as f64 + 0.5, iy as f64 + 0.5)
    }

    /// Screen position and depth of a camera-space point in front of the
    /// camera. Returns None at or behind z = 0.
    pub fn project_camera(&self, p: Point3<f64>) -> Option<(f64, f64, f64)> {
        if p.z <= 0.0 {
            return None;
        }
        let f = self.f_px();
        Some((
            self.width as f64 / 2.0 + f * p.x / p.z,
            self.height as f64 / 2.0 + f * p.y / p.z,
            p.z,
        ))
    }

    /// Screen position and depth of a world-space point.
    pub fn project_world(&self, p: Point3<f64>) -> Option<(f64, f64, f64)> {
        self.project_camera(self.pose * p)
    }

    /// World → camera pose for a camera at `eye` looking toward `target`,
    /// with `up` fixing the roll.
    pub fn look_at(
        eye: Point3<f64>,
        target: Point3<f64>,
        up: Vector3<f64>,
    ) -> Result<Isometry3<f64>, MeshingError> {
        let forward = target - eye;
        if forward.norm() < 1e-12 {
            return Err(MeshingError::InvalidCamera("eye and target coincide".into()));
        }
        let f = forward.normalize();
        let right = (-up).cross(&f);
        if right.norm() < 1e-9 {
            return Err(MeshingError::InvalidCamera(
                "view direction is parallel to the up vector".into(),
            ));
        }
        let r = right.normalize();
        let d = f.cross(&r);
        let rot = Rotation3::from_matrix_unchecked(Matrix3::new(
            r.x, r.y, r.z, //
            d.x, d.y, d.z, //
            f.x, f.y, f.z,
        ));
        let q = UnitQuaternion::from_rotation_matrix(&rot);
        let t = Translation3::from(-(q * eye.coords));
        Ok(Isometry3::from_parts(t, q))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_camera() -> CameraModel {
        CameraModel::new(
            200,
            100,
            std::f64::consts::FRAC_PI_2,
            Isometry3::identity(),
            0.1,
            100.0,
        )
        .unwrap()
    }

    #[test]
    fn focal_length_from_fov() {
        let cam = unit_camera();
        assert!((cam.f_px() - 50.0).abs() < 1e-12);
        assert!((cam.hfov() - 2.0 * 2.0f64.atan()).abs() < 1e-12);
    }

    #[test]
    fn center_pixel_looks_forward() {
        let cam = unit_camera();
        let (origin, dir) = cam.ray_through(100.0, 50.0);
        assert!((origin.coords.norm()) < 1e-12);
        assert!((dir - Vector3::z()).norm() < 1e-12);
    }

    #[test]
    fn projection_inverts_ray_generation() {
        let cam = unit_camera();
        for &(sx, sy) in &[(3.25, 7.5), (100.0, 50.0), (180.0, 90.75), (0.5, 99.5)] {
            let (origin, dir) = cam.ray_through(sx, sy);
            let p = origin + dir * 7.3;
            let (px, py, depth) = cam.project_world(p).unwrap();
            assert!((px - sx).abs() < 1e-9, "sx {sx} became {px}");
            assert!((py - sy).abs() < 1e-9, "sy {sy} became {py}");
            assert!(depth > 0.0 && depth < 7.3 + 1e-9);
        }
    }

    #[test]
    fn behind_camera_does_not_project() {
        let cam = unit_camera();
        assert!(cam.project_world(Point3::new(0.0, 0.0, -1.0)).is_none());
        assert!(cam.project_world(Point3::origin()).is_none());
    }

    #[test]
    fn look_at_maps_target_ahead_and_up_upward() {
        let eye = Point3::new(0.0, 2.0, -5.0);
        let target = Point3::new(0.0, 2.0, 5.0);
        let pose = CameraModel::look_at(eye, target, Vector3::y()).unwrap();
        let t = pose * target;
        assert!(t.x.abs() < 1e-12 && t.y.abs() < 1e-12);
        assert!((t.z - 10.0).abs() < 1e-12);
        // A point above the target lands at smaller screen y (image up).
        let above = pose * Point3::new(0.0, 3.0, 5.0);
        assert!(above.y < -0.9);
    }

    #[test]
    fn constructor_rejects_bad_parameters() {
        let pose = Isometry3::identity();
        assert!(CameraModel::new(0, 100, 1.0, pose, 0.1, 10.0).is_err());
        assert!(CameraModel::new(100, 100, 0.0, pose, 0.1, 10.0).is_err());
        assert!(CameraModel::new(100, 100, 1.0, pose, 5.0, 5.0).is_err());
        assert!(CameraModel::new(100, 100, 1.0, pose, -1.0, 5.0).is_err());
        assert!(unit_camera().with_baseline(0.0).is_err());
        assert!(CameraModel::look_at(Point3::origin(), Point3::new(0.0, 1.0, 0.0), Vector3::y())
            .is_err());
    }
}
