//! Pose estimation for a 1-D pinhole camera from quantized observations of
//! known planar points.
//!
//! The estimator intersects, for each candidate orientation, the wedges of
//! camera locations consistent with every observed pixel, and returns the
//! centre of mass of the resulting region. Brute-force ℓ2/ℓ∞ reprojection
//! minimizers and a seeded scene generator are included for comparison.

pub mod baselines;
pub mod camera;
pub mod estimator;
pub mod geometry;
pub mod scenegen;

pub use baselines::{minimize_l2, minimize_linf, reprojection_residuals, GridSpec, Norm};
pub use camera::{CameraModel, Observation, Pose};
pub use estimator::{
    estimate_location, estimate_pose, location_region, ConsistencySlice, EstimatorError,
    PoseEstimate, SweepConfig,
};
pub use geometry::{ConvexPolygon, HalfPlane, Point2};
pub use scenegen::{generate, generate_collinear, generate_trial, Scene, SceneConfig};
