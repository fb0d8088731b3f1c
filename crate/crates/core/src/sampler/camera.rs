use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{rot_x, rot_y, rot_z, sin_cos_deg, Mat3, Vec3};

/// Near clipping distance in meters.
pub const NEAR_PLANE: f64 = 0.1;

/// Orbit placement around a look-at point plus a jitter rotation.
///
/// The eye sits at `look_at + distance * (cos(el) sin(az), sin(el), cos(el) cos(az))`
/// in a y-up world. Pan turns about the camera's vertical axis, tilt about its
/// horizontal axis, and roll about the optical axis, applied in that order in
/// the camera's own frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraPose {
    pub azimuth: f64,
    pub elevation: f64,
    pub distance: f64,
    pub pan: f64,
    pub tilt: f64,
    pub roll: f64,
    pub look_at: [f64; 3],
}

impl CameraPose {
    pub fn eye(&self) -> Vec3 {
        let (sa, ca) = sin_cos_deg(self.azimuth);
        let (se, ce) = sin_cos_deg(self.elevation);
        Vec3::from(self.look_at) + self.distance * Vec3::new(ce * sa, se, ce * ca)
    }
}

/// Pinhole camera: x right, y down, z forward, pixels with y down.
#[derive(Debug, Clone, PartialEq)]
pub struct Camera {
    /// World-to-camera rotation.
    pub rotation: Mat3,
    pub eye: Vec3,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl Camera {
    #[inline]
    pub fn to_camera(&self, p: &Vec3) -> Vec3 {
        self.rotation * (p - self.eye)
    }

    #[inline]
    pub fn to_world(&self, p: &Vec3) -> Vec3 {
        self.rotation.transpose() * p + self.eye
    }

    /// Pixel coordinates of a camera-space point (z must be positive).
    #[inline]
    pub fn project(&self, p: &Vec3) -> (f64, f64) {
        (self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy)
    }

    /// Camera-space direction through pixel position `(u, v)`, with z = 1.
    #[inline]
    pub fn ray(&self, u: f64, v: f64) -> Vec3 {
        Vec3::new((u - self.cx) / self.fx, (v - self.cy) / self.fy, 1.0)
    }
}

/// Builds the world-to-camera transform and intrinsics.
pub fn camera_matrices(pose: &CameraPose, width: u32, height: u32, fov_deg: f64) -> Result<Camera> {
    if !(fov_deg > 0.0 && fov_deg < 180.0) {
        return Err(Error::Geometry(format!("field of view {fov_deg} outside (0, 180)")));
    }
    if !(pose.distance > 0.0) || !pose.distance.is_finite() {
        return Err(Error::Geometry(format!("camera distance {}", pose.distance)));
    }
    let (sa, ca) = sin_cos_deg(pose.azimuth);
    let (se, ce) = sin_cos_deg(pose.elevation);
    let forward = -Vec3::new(ce * sa, se, ce * ca);
    let right = Vec3::new(ca, 0.0, -sa);
    let down = forward.cross(&right);
    let base = Mat3::from_rows(&[right.transpose(), down.transpose(), forward.transpose()]);
    let jitter = rot_y(pose.pan) * rot_x(pose.tilt) * rot_z(pose.roll);
    let fx = 0.5 * f64::from(width) / (0.5 * fov_deg.to_radians()).tan();
    Ok(Camera {
        rotation: jitter.transpose() * base,
        eye: pose.eye(),
        fx,
        fy: fx,
        cx: 0.5 * f64::from(width),
        cy: 0.5 * f64::from(height),
        width,
        height,
    })
}
