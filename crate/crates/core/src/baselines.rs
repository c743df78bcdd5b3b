//! Brute-force minimizers of the reprojection error under the ℓ2 and ℓ∞
//! norms, used as comparison baselines.
//!
//! The search evaluates a regular grid over `(t_x, t_z, θ)`, then repeatedly
//! shrinks the search box around the incumbent and re-grids it. Ties are
//! broken towards the lowest linear cell index, so results are deterministic
//! regardless of how the evaluation is scheduled.

use std::f64::consts::TAU;

use rayon::prelude::*;
use thiserror::Error;

use crate::camera::{normalize_angle, CameraModel, Observation, Pose};
use crate::estimator::PoseEstimate;
use crate::geometry::Point2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("each grid dimension needs at least 2 points")]
    TooFewPoints,
    #[error("shrink factor must lie in (0, 1), got {0}")]
    InvalidShrink(f64),
    #[error("grid bounds must be finite with lo < hi")]
    InvalidBounds,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub t_x: (f64, f64),
    pub t_z: (f64, f64),
    /// Treated as periodic: `n` samples at `lo + i·(hi − lo)/n`.
    pub theta: (f64, f64),
    /// Points per dimension `[t_x, t_z, θ]`.
    pub points: [usize; 3],
    /// Refinement stages after the initial grid.
    pub stages: usize,
    pub shrink: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self::over_box(50.0)
    }
}

impl GridSpec {
    /// Default grid over `[-half, half]² × [0, 2π)`.
    pub fn over_box(half: f64) -> Self {
        Self {
            t_x: (-half, half),
            t_z: (-half, half),
            theta: (0.0, TAU),
            points: [64, 64, 128],
            stages: 5,
            shrink: 0.15,
        }
    }

    pub fn validate(&self) -> Result<(), GridError> {
        if self.points.iter().any(|&n| n < 2) {
            return Err(GridError::TooFewPoints);
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(GridError::InvalidShrink(self.shrink));
        }
        for (lo, hi) in [self.t_x, self.t_z, self.theta] {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(GridError::InvalidBounds);
            }
        }
        Ok(())
    }

    /// Grid pitch `[t_x, t_z, θ]` of the final stage.
    pub fn final_pitch(&self) -> [f64; 3] {
        let s = self.shrink.powi(self.stages as i32);
        let [nx, nz, nt] = self.points;
        [
            (self.t_x.1 - self.t_x.0) * s / (nx - 1) as f64,
            (self.t_z.1 - self.t_z.0) * s / (nz - 1) as f64,
            (self.theta.1 - self.theta.0) * s / nt as f64,
        ]
    }
}

/// Which norm of the residual vector to minimize.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    L2,
    LInf,
}

impl Norm {
    /// `Σ r²` for ℓ2, `max |r|` for ℓ∞.
    pub fn cost(self, residuals: &[f64]) -> f64 {
        match self {
            Norm::L2 => residuals.iter().map(|r| r * r).sum(),
            Norm::LInf => residuals.iter().fold(0.0, |m, r| m.max(r.abs())),
        }
    }
}

/// `q_i − p_i(pose)` for every correspondence. A disagreement about
/// visibility (observed but predicted off-sensor or behind the camera, or the
/// reverse) costs a residual of `τ`; agreeing sentinels contribute zero.
pub fn reprojection_residuals(
    cam: &CameraModel,
    pose: &Pose,
    points: &[Point2],
    observations: &[Observation],
) -> Vec<f64> {
    let penalty = cam.sensor_width();
    points
        .iter()
        .zip(observations)
        .map(|(&s, obs)| {
            let predicted = cam.project(pose, s).ok().filter(|&p| cam.in_view(p));
            match (obs.value(), predicted) {
                (Some(q), Some(p)) => q - p,
                (None, None) => 0.0,
                _ => penalty,
            }
        })
        .collect()
}

/// Cost of a pose under `norm`, evaluated in the camera-frame form used by
/// the grid search (per-orientation point terms precomputed).
struct CostModel<'a> {
    f: f64,
    half_tau: f64,
    penalty: f64,
    norm: Norm,
    points: &'a [Point2],
    observations: &'a [Observation],
}

impl CostModel<'_> {
    /// Point terms `(s_x cosθ + s_z sinθ, s_z cosθ − s_x sinθ)`.
    fn rotated(&self, theta: f64) -> Vec<(f64, f64)> {
        let (sin, cos) = theta.sin_cos();
        self.points
            .iter()
            .map(|s| (s.x * cos + s.z * sin, s.z * cos - s.x * sin))
            .collect()
    }

    fn eval(&self, rotated: &[(f64, f64)], theta: f64, t_x: f64, t_z: f64) -> f64 {
        let (sin, cos) = theta.sin_cos();
        let lat0 = t_x * cos + t_z * sin;
        let dep0 = t_z * cos - t_x * sin;
        let mut acc = 0.0f64;
        for (&(lat_s, dep_s), obs) in rotated.iter().zip(self.observations) {
            let depth = dep_s - dep0;
            let predicted = if depth > 0.0 {
                let p = self.f * (lat_s - lat0) / depth;
                (p.abs() <= self.half_tau).then_some(p)
            } else {
                None
            };
            let r = match (obs.value(), predicted) {
                (Some(q), Some(p)) => q - p,
                (None, None) => 0.0,
                _ => self.penalty,
            };
            match self.norm {
                Norm::L2 => acc += r * r,
                Norm::LInf => acc = acc.max(r.abs()),
            }
        }
        acc
    }
}

/// Result of a grid search, with the best cost after each stage.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSearch {
    pub pose: Pose,
    pub cost: f64,
    pub stage_costs: Vec<f64>,
}

fn axis(lo: f64, hi: f64, n: usize, periodic: bool) -> Vec<f64> {
    let denom = if periodic { n } else { n - 1 } as f64;
    (0..n).map(|i| lo + (hi - lo) * i as f64 / denom).collect()
}

/// Multi-stage grid minimization of the reprojection cost. With
/// `known_theta` set, only `(t_x, t_z)` are searched.
pub fn grid_minimize(
    cam: &CameraModel,
    points: &[Point2],
    observations: &[Observation],
    grid: &GridSpec,
    norm: Norm,
    known_theta: Option<f64>,
) -> Result<GridSearch, GridError> {
    grid.validate()?;
    let model = CostModel {
        f: cam.focal_length(),
        half_tau: 0.5 * cam.sensor_width(),
        penalty: cam.sensor_width(),
        norm,
        points,
        observations,
    };
    let [nx, nz, nt] = grid.points;
    let (mut bx, mut bz, mut bt) = (grid.t_x, grid.t_z, grid.theta);
    let mut best = (f64::INFINITY, 0.0, 0.0, known_theta.unwrap_or(0.0));
    let mut stage_costs = Vec::with_capacity(grid.stages + 1);

    for stage in 0..=grid.stages {
        let xs = axis(bx.0, bx.1, nx, false);
        let zs = axis(bz.0, bz.1, nz, false);
        let thetas = match known_theta {
            Some(t) => vec![t],
            None => axis(bt.0, bt.1, nt, true),
        };
        let cells = nx * nz;
        // argmin over (theta, x, z) in row-major order; lowest index wins ties
        let (cost, idx) = thetas
            .par_iter()
            .enumerate()
            .map(|(ti, &theta)| {
                let rotated = model.rotated(theta);
                let mut local = (f64::INFINITY, usize::MAX);
                for (xi, &x) in xs.iter().enumerate() {
                    for (zi, &z) in zs.iter().enumerate() {
                        let c = model.eval(&rotated, theta, x, z);
                        if c < local.0 {
                            local = (c, ti * cells + xi * nz + zi);
                        }
                    }
                }
                local
            })
            .reduce(
                || (f64::INFINITY, usize::MAX),
                |a, b| if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a },
            );
        // keep the incumbent if a refined grid fails to improve on it
        if cost < best.0 {
            let (ti, rest) = (idx / cells, idx % cells);
            best = (cost, xs[rest / nz], zs[rest % nz], thetas[ti]);
        }
        stage_costs.push(best.0);

        if stage < grid.stages {
            let shrink = |(lo, hi): (f64, f64), centre: f64| {
                let half = 0.5 * (hi - lo) * grid.shrink;
                (centre - half, centre + half)
            };
            bx = shrink(bx, best.1);
            bz = shrink(bz, best.2);
            bt = shrink(bt, best.3);
        }
    }

    Ok(GridSearch {
        pose: Pose::new(best.1, best.2, best.3),
        cost: best.0,
        stage_costs,
    })
}

fn to_estimate(search: &GridSearch, known_theta: Option<f64>) -> PoseEstimate {
    PoseEstimate {
        t_x: search.pose.t_x,
        t_z: search.pose.t_z,
        theta: known_theta.is_none().then(|| normalize_angle(search.pose.theta())),
        region_clipped: false,
    }
}

/// Global ℓ2 reprojection-error minimizer.
pub fn minimize_l2(
    cam: &CameraModel,
    points: &[Point2],
    observations: &[Observation],
    grid: &GridSpec,
    known_theta: Option<f64>,
) -> Result<PoseEstimate, GridError> {
    let search = grid_minimize(cam, points, observations, grid, Norm::L2, known_theta)?;
    Ok(to_estimate(&search, known_theta))
}

/// Global ℓ∞ reprojection-error minimizer.
pub fn minimize_linf(
    cam: &CameraModel,
    points: &[Point2],
    observations: &[Observation],
    grid: &GridSpec,
    known_theta: Option<f64>,
) -> Result<PoseEstimate, GridError> {
    let search = grid_minimize(cam, points, observations, grid, Norm::LInf, known_theta)?;
    Ok(to_estimate(&search, known_theta))
}
