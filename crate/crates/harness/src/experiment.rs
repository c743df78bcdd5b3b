//! Monte-Carlo error-decay experiments.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use shape_core::baselines::{minimize_l2, minimize_linf, GridSpec};
use shape_core::camera::normalize_angle;
use shape_core::estimator::{estimate_location, estimate_pose, PoseEstimate, SweepConfig};
use shape_core::geometry::ConvexPolygon;
use shape_core::scenegen::{generate_trial, Scene, SceneConfig};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("unknown method {0:?} (expected shape, l2 or linf)")]
    UnknownMethod(String),
    #[error("unknown mode {0:?} (expected known or full)")]
    UnknownMode(String),
    #[error("invalid experiment settings: {0}")]
    Invalid(String),
    #[error("estimator failed: {0}")]
    Estimator(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Shape,
    L2,
    LInf,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Shape, Method::L2, Method::LInf];

    pub fn name(self) -> &'static str {
        match self {
            Method::Shape => "shape",
            Method::L2 => "l2",
            Method::LInf => "linf",
        }
    }

    /// Parses a comma-separated list; `all` expands to every method.
    pub fn parse_list(s: &str) -> Result<Vec<Method>, ExperimentError> {
        if s.trim() == "all" {
            return Ok(Method::ALL.to_vec());
        }
        s.split(',').map(|m| m.trim().parse()).collect()
    }
}

impl FromStr for Method {
    type Err = ExperimentError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "shape" => Ok(Method::Shape),
            "l2" => Ok(Method::L2),
            "linf" => Ok(Method::LInf),
            other => Err(ExperimentError::UnknownMethod(other.to_string())),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Whether the true orientation is handed to the estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    KnownOrientation,
    FullPose,
}

impl FromStr for Mode {
    type Err = ExperimentError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "known" => Ok(Mode::KnownOrientation),
            "full" => Ok(Mode::FullPose),
            other => Err(ExperimentError::UnknownMode(other.to_string())),
        }
    }
}

fn default_world_half() -> f64 {
    50.0
}

/// Estimator settings shared by every trial. Read from the same JSON file as
/// the scene configuration; all fields are optional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSettings {
    /// Half-width of the square world box `[-h, h]²`.
    #[serde(default = "default_world_half")]
    pub world_half: f64,
    #[serde(default)]
    pub sweep_coarse: Option<usize>,
    #[serde(default)]
    pub sweep_fine: Option<usize>,
    /// Baseline grid points per dimension `[t_x, t_z, θ]`.
    #[serde(default)]
    pub grid_points: Option<[usize; 3]>,
    #[serde(default)]
    pub grid_stages: Option<usize>,
}

impl Default for EstimatorSettings {
    fn default() -> Self {
        Self {
            world_half: default_world_half(),
            sweep_coarse: None,
            sweep_fine: None,
            grid_points: None,
            grid_stages: None,
        }
    }
}

impl EstimatorSettings {
    pub fn world(&self) -> Result<ConvexPolygon, ExperimentError> {
        ConvexPolygon::centered_square(self.world_half)
            .map_err(|e| ExperimentError::Invalid(format!("world box: {e}")))
    }

    pub fn sweep(&self) -> SweepConfig {
        let mut s = SweepConfig::default();
        if let Some(c) = self.sweep_coarse {
            s.coarse = c;
            s.max_coarse = s.max_coarse.max(c);
        }
        if let Some(f) = self.sweep_fine {
            s.fine = f;
        }
        s
    }

    pub fn grid(&self) -> GridSpec {
        let mut g = GridSpec::over_box(self.world_half);
        if let Some(p) = self.grid_points {
            g.points = p;
        }
        if let Some(s) = self.grid_stages {
            g.stages = s;
        }
        g
    }
}

/// Contents of an experiment config file: a scene configuration plus the
/// optional estimator settings, side by side in one JSON object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub scene: SceneConfig,
    #[serde(flatten)]
    pub settings: EstimatorSettings,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        // num_points is overridden per run, so allow it to be left out
        let mut value: serde_json::Value = serde_json::from_str(text)?;
        if let Some(obj) = value.as_object_mut() {
            obj.entry("num_points").or_insert(serde_json::json!(1));
        }
        serde_json::from_value(value)
    }
}

/// Runs one estimator on a scene.
pub fn run_method(
    scene: &Scene,
    method: Method,
    known_theta: Option<f64>,
    settings: &EstimatorSettings,
) -> Result<PoseEstimate, ExperimentError> {
    let cam = &scene.camera;
    let (pts, obs) = (&scene.points, &scene.observations);
    let fail = |e: &dyn fmt::Display| ExperimentError::Estimator(e.to_string());
    match method {
        Method::Shape => {
            let world = settings.world()?;
            match known_theta {
                Some(theta) => estimate_location(cam, theta, pts, obs, &world),
                None => estimate_pose(cam, pts, obs, &world, &settings.sweep()),
            }
            .map_err(|e| fail(&e))
        }
        Method::L2 => minimize_l2(cam, pts, obs, &settings.grid(), known_theta).map_err(|e| fail(&e)),
        Method::LInf => {
            minimize_linf(cam, pts, obs, &settings.grid(), known_theta).map_err(|e| fail(&e))
        }
    }
}

/// Smallest signed difference between two angles, in `(-π, π]`.
pub fn angle_difference(a: f64, b: f64) -> f64 {
    let d = normalize_angle(a - b);
    if d > std::f64::consts::PI {
        d - std::f64::consts::TAU
    } else {
        d
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub sq_err: f64,
    /// Squared orientation error (rad²); zero in known-orientation mode.
    pub sq_orient_err: f64,
    pub ms: f64,
}

/// RNG stream for trial `trial` at `m` points: distinct for every (M, trial)
/// pair, shared across methods so they see identical scenes.
pub fn trial_stream(m: usize, trial: usize) -> u64 {
    ((m as u64) << 32) | trial as u64
}

pub fn trial_scene(config: &SceneConfig, m: usize, trial: usize) -> Result<Scene, ExperimentError> {
    let cfg = SceneConfig { num_points: m, ..config.clone() };
    generate_trial(&cfg, trial_stream(m, trial)).map_err(|e| ExperimentError::Invalid(e.to_string()))
}

/// Runs one trial; `Ok(None)` marks an excluded trial (estimator failure).
pub fn run_trial(
    scene: &Scene,
    method: Method,
    mode: Mode,
    settings: &EstimatorSettings,
) -> Option<TrialOutcome> {
    let truth = scene.true_pose.expect("generated scenes carry ground truth");
    let known = (mode == Mode::KnownOrientation).then(|| truth.theta());
    let start = Instant::now();
    let est = run_method(scene, method, known, settings).ok()?;
    let ms = start.elapsed().as_secs_f64() * 1e3;
    let d = est.location() - truth.location();
    let sq_orient_err = est.theta.map_or(0.0, |t| angle_difference(t, truth.theta()).powi(2));
    Some(TrialOutcome { sq_err: d.dot(d), sq_orient_err, ms })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    pub method: Method,
    pub m: usize,
    pub trials_used: usize,
    pub trials_excluded: usize,
    pub mean_sq_err: f64,
    pub mean_sq_orient_err: f64,
    pub median_ms: f64,
}

impl ExperimentRow {
    pub fn log2_m(&self) -> f64 {
        (self.m as f64).log2()
    }

    pub fn log2_err(&self) -> f64 {
        self.mean_sq_err.log2()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentResult {
    /// Sorted by method, then M.
    pub rows: Vec<ExperimentRow>,
}

#[derive(Debug, Clone)]
pub struct SimulationPlan {
    pub m_values: Vec<usize>,
    pub trials: usize,
    pub methods: Vec<Method>,
    pub mode: Mode,
}

fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Reduces trial outcomes (in trial order) to one row.
pub fn summarize(method: Method, m: usize, outcomes: &[Option<TrialOutcome>]) -> ExperimentRow {
    let used: Vec<&TrialOutcome> = outcomes.iter().flatten().collect();
    let n = used.len();
    let mean = |f: fn(&TrialOutcome) -> f64| {
        if n == 0 {
            f64::NAN
        } else {
            used.iter().map(|o| f(o)).sum::<f64>() / n as f64
        }
    };
    let mut times: Vec<f64> = used.iter().map(|o| o.ms).collect();
    ExperimentRow {
        method,
        m,
        trials_used: n,
        trials_excluded: outcomes.len() - n,
        mean_sq_err: mean(|o| o.sq_err),
        mean_sq_orient_err: mean(|o| o.sq_orient_err),
        median_ms: median(&mut times),
    }
}

/// Runs every (method, M) cell of the plan.
pub fn simulate(
    config: &ExperimentConfig,
    plan: &SimulationPlan,
) -> Result<ExperimentResult, ExperimentError> {
    if plan.trials == 0 {
        return Err(ExperimentError::Invalid("trials must be positive".into()));
    }
    if plan.m_values.contains(&0) {
        return Err(ExperimentError::Invalid("M must be positive".into()));
    }
    let mut methods = plan.methods.clone();
    methods.sort();
    methods.dedup();
    let mut m_values = plan.m_values.clone();
    m_values.sort_unstable();
    m_values.dedup();

    let mut rows = Vec::new();
    for &method in &methods {
        for &m in &m_values {
            let outcomes: Vec<Option<TrialOutcome>> = (0..plan.trials)
                .into_par_iter()
                .map(|trial| {
                    let scene = trial_scene(&config.scene, m, trial).ok()?;
                    run_trial(&scene, method, plan.mode, &config.settings)
                })
                .collect();
            rows.push(summarize(method, m, &outcomes));
        }
    }
    Ok(ExperimentResult { rows })
}

pub const CSV_HEADER: [&str; 8] = [
    "method",
    "M",
    "trials_used",
    "trials_excluded",
    "mean_sq_err",
    "log2_M",
    "log2_err",
    "median_ms",
];

impl ExperimentResult {
    pub fn rows_for(&self, method: Method) -> impl Iterator<Item = &ExperimentRow> {
        self.rows.iter().filter(move |r| r.method == method)
    }

    pub fn row(&self, method: Method, m: usize) -> Option<&ExperimentRow> {
        self.rows.iter().find(|r| r.method == method && r.m == m)
    }

    /// Least-squares slope of `log2 E` against `log2 M` for one method.
    pub fn decay_slope(&self, method: Method) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .rows_for(method)
            .filter(|r| r.mean_sq_err > 0.0 && r.mean_sq_err.is_finite())
            .map(|r| (r.log2_m(), r.log2_err()))
            .collect();
        least_squares_slope(&pts)
    }

    /// Writes the CSV table. With `timing` off the `median_ms` column is
    /// written as zero so the output depends only on seed, config and flags.
    pub fn write_csv<W: Write>(&self, out: W, timing: bool) -> Result<(), ExperimentError> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(CSV_HEADER)?;
        for r in &self.rows {
            let ms = if timing { r.median_ms } else { 0.0 };
            w.write_record([
                r.method.name().to_string(),
                r.m.to_string(),
                r.trials_used.to_string(),
                r.trials_excluded.to_string(),
                format!("{:.9e}", r.mean_sq_err),
                format!("{:.6}", r.log2_m()),
                format!("{:.6}", r.log2_err()),
                format!("{ms:.4}"),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Gnuplot-friendly companion table: one block per method separated by
    /// two blank lines, columns `M log2_M mean_sq_err log2_err
    /// mean_sq_orient_err`.
    pub fn write_dat<W: Write>(&self, mut out: W) -> Result<(), ExperimentError> {
        let mut methods: Vec<Method> = self.rows.iter().map(|r| r.method).collect();
        methods.dedup();
        for (i, method) in methods.into_iter().enumerate() {
            if i > 0 {
                writeln!(out, "\n")?;
            }
            writeln!(out, "# {method}")?;
            writeln!(out, "# M log2_M mean_sq_err log2_err mean_sq_orient_err")?;
            for r in self.rows_for(method) {
                writeln!(
                    out,
                    "{} {:.6} {:.9e} {:.6} {:.9e}",
                    r.m,
                    r.log2_m(),
                    r.mean_sq_err,
                    r.log2_err(),
                    r.mean_sq_orient_err
                )?;
            }
        }
        Ok(())
    }
}

pub fn least_squares_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
