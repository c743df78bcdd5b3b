//! Forward model of a 1-D pinhole camera: perspective projection onto the
//! image line followed by pixel quantization.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CameraError {
    #[error("focal length must be positive and finite, got {0}")]
    InvalidFocalLength(f64),
    #[error("sensor width must be positive and finite, got {0}")]
    InvalidSensorWidth(f64),
    #[error("resolution must be at least one pixel")]
    ZeroResolution,
    #[error("field of view must lie in (0, 180) degrees, got {0}")]
    InvalidFov(f64),
    #[error("point is not in front of the camera (depth {depth})")]
    BehindCamera { depth: f64 },
}

/// Camera intrinsics: focal length `f`, resolution `n`, sensor width `tau`
/// and the derived pixel width `w = tau / n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CameraSpec", into = "CameraSpec")]
pub struct CameraModel {
    f: f64,
    n: u32,
    tau: f64,
    w: f64,
}

/// Serialized form of a [`CameraModel`]: `{f, N, tau}`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CameraSpec {
    pub f: f64,
    #[serde(rename = "N")]
    pub n: u32,
    pub tau: f64,
}

impl TryFrom<CameraSpec> for CameraModel {
    type Error = CameraError;
    fn try_from(spec: CameraSpec) -> Result<Self, CameraError> {
        CameraModel::new(spec.f, spec.n, spec.tau)
    }
}

impl From<CameraModel> for CameraSpec {
    fn from(cam: CameraModel) -> Self {
        CameraSpec { f: cam.f, n: cam.n, tau: cam.tau }
    }
}

impl CameraModel {
    pub fn new(f: f64, n: u32, tau: f64) -> Result<Self, CameraError> {
        if !(f.is_finite() && f > 0.0) {
            return Err(CameraError::InvalidFocalLength(f));
        }
        if !(tau.is_finite() && tau > 0.0) {
            return Err(CameraError::InvalidSensorWidth(tau));
        }
        if n == 0 {
            return Err(CameraError::ZeroResolution);
        }
        Ok(Self { f, n, tau, w: tau / f64::from(n) })
    }

    /// Camera whose sensor spans `fov_deg` degrees at focal length `f`.
    pub fn from_fov_degrees(f: f64, fov_deg: f64, n: u32) -> Result<Self, CameraError> {
        if !(fov_deg > 0.0 && fov_deg < 180.0) {
            return Err(CameraError::InvalidFov(fov_deg));
        }
        if !(f.is_finite() && f > 0.0) {
            return Err(CameraError::InvalidFocalLength(f));
        }
        Self::new(f, n, 2.0 * f * (0.5 * fov_deg.to_radians()).tan())
    }

    /// The simulated camera used throughout the experiments: 320 pixels,
    /// 90° field of view, unit focal length.
    pub fn reference() -> Self {
        Self::from_fov_degrees(1.0, 90.0, 320).expect("valid reference camera")
    }

    pub fn focal_length(&self) -> f64 {
        self.f
    }

    pub fn resolution(&self) -> u32 {
        self.n
    }

    pub fn sensor_width(&self) -> f64 {
        self.tau
    }

    pub fn pixel_width(&self) -> f64 {
        self.w
    }

    /// Perspective projection of `s` seen from `pose`.
    pub fn project(&self, pose: &Pose, s: Point2) -> Result<f64, CameraError> {
        let (lateral, depth) = pose.to_camera_frame(s);
        if depth <= 0.0 {
            return Err(CameraError::BehindCamera { depth });
        }
        Ok(self.f * lateral / depth)
    }

    /// Maps an image-plane coordinate to the centre of its pixel, or to the
    /// out-of-view sentinel when it falls outside the sensor.
    pub fn quantize(&self, p: f64) -> Observation {
        let half = 0.5 * self.tau;
        if !(p >= -half && p <= half) {
            return Observation::OUT_OF_VIEW;
        }
        let w = self.w;
        let n = i64::from(self.n);
        let q = if n % 2 == 0 {
            // centres at (m + 1/2)·w for m in [-N/2, N/2)
            let m = ((p / w).floor() as i64).clamp(-n / 2, n / 2 - 1);
            m as f64 * w + 0.5 * w
        } else {
            // centres at k·w for k in [-(N-1)/2, (N-1)/2]
            let k = ((p.abs() / w + 0.5).floor() as i64).min((n - 1) / 2);
            p.signum() * k as f64 * w
        };
        Observation::pixel(q)
    }

    /// `quantize ∘ project` for each point; points behind the camera map to
    /// the sentinel.
    pub fn observe(&self, pose: &Pose, points: &[Point2]) -> Vec<Observation> {
        points
            .iter()
            .map(|&s| match self.project(pose, s) {
                Ok(p) => self.quantize(p),
                Err(_) => Observation::OUT_OF_VIEW,
            })
            .collect()
    }

    /// True when `p` lands on the sensor.
    pub fn in_view(&self, p: f64) -> bool {
        p.abs() <= 0.5 * self.tau
    }
}

/// Wraps an angle into `[0, 2π)`.
pub fn normalize_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Camera location `(t_x, t_z)` and anti-clockwise orientation `theta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub t_x: f64,
    pub t_z: f64,
    theta: f64,
}

impl Pose {
    pub fn new(t_x: f64, t_z: f64, theta: f64) -> Self {
        Self { t_x, t_z, theta: normalize_angle(theta) }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn location(&self) -> Point2 {
        Point2::new(self.t_x, self.t_z)
    }

    /// Coordinates of `s` in the camera frame as `(lateral, depth)`.
    /// The projection is `f · lateral / depth`.
    pub fn to_camera_frame(&self, s: Point2) -> (f64, f64) {
        let (sin, cos) = self.theta.sin_cos();
        let dx = s.x - self.t_x;
        let dz = s.z - self.t_z;
        (dx * cos + dz * sin, dz * cos - dx * sin)
    }

    /// Inverse of [`Pose::to_camera_frame`].
    pub fn to_world(&self, lateral: f64, depth: f64) -> Point2 {
        let (sin, cos) = self.theta.sin_cos();
        Point2::new(
            self.t_x + lateral * cos - depth * sin,
            self.t_z + lateral * sin + depth * cos,
        )
    }
}

/// A quantized projection `q` (a pixel centre, metres on the image line) or
/// the out-of-view sentinel. Serializes as a number or `null`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Observation(Option<f64>);

impl Observation {
    pub const OUT_OF_VIEW: Observation = Observation(None);

    pub fn pixel(q: f64) -> Self {
        Self(Some(q))
    }

    pub fn value(&self) -> Option<f64> {
        self.0
    }

    pub fn is_out_of_view(&self) -> bool {
        self.0.is_none()
    }
}

impl From<Option<f64>> for Observation {
    fn from(v: Option<f64>) -> Self {
        Self(v)
    }
}
