//! Single-scene estimation with a human-readable report.

use std::fmt;

use shape_core::estimator::{location_region, PoseEstimate};
use shape_core::geometry::ConvexPolygon;
use shape_core::scenegen::Scene;

use crate::experiment::{angle_difference, run_method, EstimatorSettings, ExperimentError, Method, Mode};

#[derive(Debug, Clone)]
pub struct EstimateReport {
    pub method: Method,
    pub estimate: PoseEstimate,
    /// `‖t̂ − t‖²` when the scene carries ground truth.
    pub sq_err: Option<f64>,
    pub sq_orient_err: Option<f64>,
    /// Consistency region at the estimated (or given) orientation; SHAPE only.
    pub region: Option<ConvexPolygon>,
}

pub fn estimate_scene(
    scene: &Scene,
    method: Method,
    mode: Mode,
    settings: &EstimatorSettings,
) -> Result<EstimateReport, ExperimentError> {
    let known = match mode {
        Mode::KnownOrientation => Some(
            scene
                .true_pose
                .ok_or_else(|| ExperimentError::Invalid("known-orientation mode needs pose.theta".into()))?
                .theta(),
        ),
        Mode::FullPose => None,
    };
    let estimate = run_method(scene, method, known, settings)?;
    let sq_err = scene.true_pose.map(|t| {
        let d = estimate.location() - t.location();
        d.dot(d)
    });
    let sq_orient_err = match (scene.true_pose, estimate.theta) {
        (Some(t), Some(th)) => Some(angle_difference(th, t.theta()).powi(2)),
        _ => None,
    };
    let region = match method {
        Method::Shape => {
            let theta = estimate.theta.or(known).expect("orientation is known or estimated");
            let slice = location_region(
                &scene.camera,
                theta,
                &scene.points,
                &scene.observations,
                &settings.world()?,
            )
            .map_err(|e| ExperimentError::Estimator(e.to_string()))?;
            Some(slice.region)
        }
        _ => None,
    };
    Ok(EstimateReport { method, estimate, sq_err, sq_orient_err, region })
}

impl fmt::Display for EstimateReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let e = &self.estimate;
        writeln!(f, "method: {}", self.method)?;
        writeln!(f, "t_x: {:.12}", e.t_x)?;
        writeln!(f, "t_z: {:.12}", e.t_z)?;
        if let Some(theta) = e.theta {
            writeln!(f, "theta: {theta:.12}")?;
        }
        if let Some(err) = self.sq_err {
            writeln!(f, "sq_err: {err:.12e}")?;
        }
        if let Some(err) = self.sq_orient_err {
            writeln!(f, "sq_orient_err: {err:.12e}")?;
        }
        if let Some(region) = &self.region {
            writeln!(f, "region_clipped: {}", e.region_clipped)?;
            writeln!(f, "region_area: {:.12e}", region.area())?;
            writeln!(f, "region_vertices: {}", region.len())?;
            for v in region.vertices() {
                writeln!(f, "  {:.12} {:.12}", v.x, v.z)?;
            }
        }
        Ok(())
    }
}
