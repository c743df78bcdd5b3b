//! Seeded random scenes: a camera pose plus points scattered inside its
//! field of view, together with their quantized observations.
//!
//! Randomness comes from ChaCha8 (`rand_chacha::ChaCha8Rng`). A trial's
//! stream is `ChaCha8Rng::seed_from_u64(seed)` with `set_stream(trial)`, so
//! every trial is reproducible on its own and no generator state is shared.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::camera::{CameraModel, Observation, Pose};
use crate::geometry::Point2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SceneError {
    #[error("invalid scene config: {0}")]
    InvalidConfig(String),
    #[error("segment endpoint ({lateral}, {depth}) is outside the field of view")]
    SegmentOutOfView { lateral: f64, depth: f64 },
    #[error("segment endpoints coincide")]
    DegenerateSegment,
}

fn default_depth() -> (f64, f64) {
    (2.0, 10.0)
}
fn default_margin() -> f64 {
    0.05
}
fn default_pose_box() -> [(f64, f64); 2] {
    [(-5.0, 5.0), (-5.0, 5.0)]
}
fn default_theta() -> (f64, f64) {
    (0.0, TAU)
}
fn default_camera() -> CameraModel {
    CameraModel::reference()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    #[serde(default)]
    pub seed: u64,
    pub num_points: usize,
    /// Point depth range along the optical axis, metres.
    #[serde(default = "default_depth")]
    pub depth_range: (f64, f64),
    /// Fraction of the half-sensor kept clear at each edge.
    #[serde(default = "default_margin")]
    pub lateral_margin: f64,
    /// `[t_x range, t_z range]` for the camera location.
    #[serde(default = "default_pose_box")]
    pub pose_box: [(f64, f64); 2],
    #[serde(default = "default_theta")]
    pub theta_range: (f64, f64),
    #[serde(default = "default_camera")]
    pub camera: CameraModel,
}

impl SceneConfig {
    pub fn new(seed: u64, num_points: usize) -> Self {
        Self {
            seed,
            num_points,
            depth_range: default_depth(),
            lateral_margin: default_margin(),
            pose_box: default_pose_box(),
            theta_range: default_theta(),
            camera: default_camera(),
        }
    }

    pub fn with_camera(mut self, camera: CameraModel) -> Self {
        self.camera = camera;
        self
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        let bad = |m: &str| Err(SceneError::InvalidConfig(m.to_string()));
        if self.num_points == 0 {
            return bad("num_points must be at least 1");
        }
        let (d0, d1) = self.depth_range;
        if !(d0 > 0.0 && d0 < d1 && d1.is_finite()) {
            return bad("depth range must be positive and ordered");
        }
        if !(0.0..1.0).contains(&self.lateral_margin) {
            return bad("lateral margin must lie in [0, 1)");
        }
        for (lo, hi) in self.pose_box.iter().chain(std::iter::once(&self.theta_range)) {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return bad("pose ranges must be finite with lo <= hi");
            }
        }
        Ok(())
    }

    /// The RNG for trial `trial` of this configuration.
    pub fn rng(&self, trial: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(trial);
        rng
    }
}

/// A generated (or loaded) problem instance.
///
/// Serializes as
/// `{camera: {f, N, tau}, pose: {tx, tz, theta}, points: [[x, z], ...],
/// observations: [q | null, ...]}`; `pose` may be omitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SceneWire", into = "SceneWire")]
pub struct Scene {
    pub camera: CameraModel,
    /// Ground truth; absent for scenes loaded without it.
    pub true_pose: Option<Pose>,
    pub points: Vec<Point2>,
    pub observations: Vec<Observation>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct PoseWire {
    tx: f64,
    tz: f64,
    theta: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SceneWire {
    camera: CameraModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pose: Option<PoseWire>,
    points: Vec<[f64; 2]>,
    observations: Vec<Observation>,
}

impl TryFrom<SceneWire> for Scene {
    type Error = SceneError;
    fn try_from(w: SceneWire) -> Result<Self, SceneError> {
        if w.points.len() != w.observations.len() {
            return Err(SceneError::InvalidConfig(format!(
                "{} points but {} observations",
                w.points.len(),
                w.observations.len()
            )));
        }
        let finite = w.points.iter().flatten().all(|v| v.is_finite())
            && w.observations.iter().all(|o| o.value().is_none_or(f64::is_finite))
            && w.pose.is_none_or(|p| p.tx.is_finite() && p.tz.is_finite() && p.theta.is_finite());
        if !finite {
            return Err(SceneError::InvalidConfig("non-finite value in scene".into()));
        }
        Ok(Scene {
            camera: w.camera,
            true_pose: w.pose.map(|p| Pose::new(p.tx, p.tz, p.theta)),
            points: w.points.iter().map(|&[x, z]| Point2::new(x, z)).collect(),
            observations: w.observations,
        })
    }
}

impl From<Scene> for SceneWire {
    fn from(s: Scene) -> Self {
        SceneWire {
            camera: s.camera,
            pose: s.true_pose.map(|p| PoseWire { tx: p.t_x, tz: p.t_z, theta: p.theta() }),
            points: s.points.iter().map(|p| [p.x, p.z]).collect(),
            observations: s.observations,
        }
    }
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

fn sample_pose(config: &SceneConfig, rng: &mut ChaCha8Rng) -> Pose {
    let t_x = uniform(rng, config.pose_box[0]);
    let t_z = uniform(rng, config.pose_box[1]);
    let theta = uniform(rng, config.theta_range);
    Pose::new(t_x, t_z, theta)
}

/// Scene for trial 0 of `config`.
pub fn generate(config: &SceneConfig) -> Result<Scene, SceneError> {
    generate_trial(config, 0)
}

/// Scene for an arbitrary trial index.
pub fn generate_trial(config: &SceneConfig, trial: u64) -> Result<Scene, SceneError> {
    config.validate()?;
    let mut rng = config.rng(trial);
    let cam = config.camera;
    let pose = sample_pose(config, &mut rng);
    let half = 0.5 * (1.0 - config.lateral_margin) * cam.sensor_width();
    let points: Vec<Point2> = (0..config.num_points)
        .map(|_| {
            let depth = uniform(&mut rng, config.depth_range);
            let image = uniform(&mut rng, (-half, half));
            pose.to_world(image * depth / cam.focal_length(), depth)
        })
        .collect();
    let observations = cam.observe(&pose, &points);
    Ok(Scene { camera: cam, true_pose: Some(pose), points, observations })
}

/// A scene whose points lie on one line segment.
#[derive(Debug, Clone, PartialEq)]
pub struct CollinearScene {
    pub scene: Scene,
    /// Shortest distance from the camera centre to the supporting line.
    pub camera_line_distance: f64,
    /// Largest distance between two generated points.
    pub span: f64,
}

/// Places `num_points` points uniformly on a segment. The endpoints are given
/// in the camera frame as `(lateral, depth)` and must both be in view.
pub fn generate_collinear(
    config: &SceneConfig,
    trial: u64,
    segment: (Point2, Point2),
) -> Result<CollinearScene, SceneError> {
    config.validate()?;
    let cam = config.camera;
    let (a, b) = segment;
    if a.distance(b) == 0.0 {
        return Err(SceneError::DegenerateSegment);
    }
    for e in [a, b] {
        if !(e.z > 0.0 && cam.in_view(cam.focal_length() * e.x / e.z)) {
            return Err(SceneError::SegmentOutOfView { lateral: e.x, depth: e.z });
        }
    }
    let mut rng = config.rng(trial);
    let pose = sample_pose(config, &mut rng);
    let (wa, wb) = (pose.to_world(a.x, a.z), pose.to_world(b.x, b.z));
    let ts: Vec<f64> = (0..config.num_points).map(|_| rng.random::<f64>()).collect();
    let points: Vec<Point2> = ts.iter().map(|&t| wa + (wb - wa) * t).collect();
    let span = match (ts.iter().cloned().reduce(f64::min), ts.iter().cloned().reduce(f64::max)) {
        (Some(lo), Some(hi)) => (hi - lo) * wa.distance(wb),
        _ => 0.0,
    };
    let dir = wb - wa;
    let camera_line_distance = dir.cross(pose.location() - wa).abs() / dir.norm();
    let observations = cam.observe(&pose, &points);
    Ok(CollinearScene {
        scene: Scene { camera: cam, true_pose: Some(pose), points, observations },
        camera_line_distance,
        span,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_scene() {
        let cfg = SceneConfig::new(42, 12);
        let a = generate(&cfg).unwrap();
        let b = generate(&cfg).unwrap();
        assert_eq!(a, b);
        for (p, q) in a.points.iter().zip(&b.points) {
            assert_eq!(p.x.to_bits(), q.x.to_bits());
            assert_eq!(p.z.to_bits(), q.z.to_bits());
        }
        let c = generate(&SceneConfig::new(43, 12)).unwrap();
        assert_ne!(a.points, c.points);
        assert_ne!(generate_trial(&cfg, 1).unwrap().points, a.points);
    }

    #[test]
    fn invalid_configs() {
        assert!(generate(&SceneConfig::new(1, 0)).is_err());
        let mut cfg = SceneConfig::new(1, 5);
        cfg.depth_range = (3.0, 2.0);
        assert!(generate(&cfg).is_err());
        cfg.depth_range = (0.0, 2.0);
        assert!(generate(&cfg).is_err());
        let mut cfg = SceneConfig::new(1, 5);
        cfg.lateral_margin = 1.0;
        assert!(generate(&cfg).is_err());
    }

    #[test]
    fn three_point_six_pixel_instance() {
        let cam = CameraModel::from_fov_degrees(1.0, 90.0, 6).unwrap();
        let scene = generate(&SceneConfig::new(7, 3).with_camera(cam)).unwrap();
        assert_eq!(scene.points.len(), 3);
        assert!(scene.observations.iter().all(|o| !o.is_out_of_view()));
    }

    #[test]
    fn collinear_points_and_span() {
        let cfg = SceneConfig::new(5, 25);
        let seg = (Point2::new(-1.5, 4.0), Point2::new(2.0, 6.0));
        let c = generate_collinear(&cfg, 3, seg).unwrap();
        let pts = &c.scene.points;
        let (a, b) = (pts[0], pts[1]);
        let dir = b - a;
        for &p in pts {
            assert!(dir.cross(p - a).abs() / dir.norm() < 1e-12);
        }
        let mut widest: f64 = 0.0;
        for p in pts {
            for q in pts {
                widest = widest.max(p.distance(*q));
            }
        }
        assert!((widest - c.span).abs() < 1e-12);
        assert!(c.span <= seg.0.distance(seg.1) + 1e-12);
        assert!(c.scene.observations.iter().all(|o| !o.is_out_of_view()));
    }

    #[test]
    fn collinear_distance_matches_closed_form() {
        let cfg = SceneConfig::new(9, 10);
        let seg = (Point2::new(-1.0, 3.0), Point2::new(1.0, 5.0));
        let c = generate_collinear(&cfg, 0, seg).unwrap();
        // in the camera frame the camera is the origin: distance from (0,0)
        // to the line through (x1,z1), (x2,z2) is |x1 z2 − x2 z1| / |d|
        let (p, q) = seg;
        let expected = (p.x * q.z - q.x * p.z).abs() / p.distance(q);
        assert!((c.camera_line_distance - expected).abs() < 1e-12);
    }

    #[test]
    fn collinear_rejects_out_of_view_segment() {
        let cfg = SceneConfig::new(5, 10);
        let r = generate_collinear(&cfg, 0, (Point2::new(0.0, 3.0), Point2::new(5.0, 3.0)));
        assert!(matches!(r, Err(SceneError::SegmentOutOfView { .. })));
        let r = generate_collinear(&cfg, 0, (Point2::new(0.0, -3.0), Point2::new(0.0, 3.0)));
        assert!(matches!(r, Err(SceneError::SegmentOutOfView { .. })));
        let p = Point2::new(0.0, 3.0);
        assert_eq!(generate_collinear(&cfg, 0, (p, p)), Err(SceneError::DegenerateSegment));
    }

    #[test]
    fn scene_json_layout() {
        let cam = CameraModel::new(2.0, 4, 4.0).unwrap();
        let scene = Scene {
            camera: cam,
            true_pose: Some(Pose::new(1.0, -2.0, 0.5)),
            points: vec![Point2::new(0.5, 3.0), Point2::new(-1.0, 4.0)],
            observations: vec![Observation::pixel(0.5), Observation::OUT_OF_VIEW],
        };
        let json = serde_json::to_string(&scene).unwrap();
        assert_eq!(
            json,
            r#"{"camera":{"f":2.0,"N":4,"tau":4.0},"pose":{"tx":1.0,"tz":-2.0,"theta":0.5},"points":[[0.5,3.0],[-1.0,4.0]],"observations":[0.5,null]}"#
        );
        let back: Scene = serde_json::from_str(&json).unwrap();
        assert_eq!(back, scene);
        let no_pose: Scene = serde_json::from_str(
            r#"{"camera":{"f":1,"N":4,"tau":2},"points":[[0,1]],"observations":[null]}"#,
        )
        .unwrap();
        assert!(no_pose.true_pose.is_none());
        assert!(serde_json::from_str::<Scene>(
            r#"{"camera":{"f":1,"N":4,"tau":2},"points":[[0,1]],"observations":[]}"#
        )
        .is_err());
    }

    #[test]
    fn config_json_defaults() {
        let cfg: SceneConfig = serde_json::from_str(r#"{"seed": 3, "num_points": 8}"#).unwrap();
        assert_eq!(cfg, SceneConfig::new(3, 8));
        let cfg: SceneConfig = serde_json::from_str(
            r#"{"num_points": 4, "camera": {"f": 2.0, "N": 4, "tau": 4.0}, "depth_range": [1, 3]}"#,
        )
        .unwrap();
        assert_eq!(cfg.camera.pixel_width(), 1.0);
        assert_eq!(cfg.depth_range, (1.0, 3.0));
        assert!(serde_json::from_str::<SceneConfig>(
            r#"{"num_points": 4, "camera": {"f": -2.0, "N": 4, "tau": 4.0}}"#
        )
        .is_err());
    }
}
