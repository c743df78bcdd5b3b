//! Consistency-region pose estimation.
//!
//! Every quantized observation confines the camera centre, for a given
//! orientation, to a wedge apexed at the observed point: the set of
//! locations from which the point projects into the observed pixel. The
//! intersection of all wedges is a convex polygon, the consistency region,
//! and the estimate is its centre of mass. With unknown orientation the
//! regions are swept over a set of candidate angles and the slice centroids
//! averaged with their areas as weights.

use std::f64::consts::TAU;

use rayon::prelude::*;
use thiserror::Error;

use crate::camera::{normalize_angle, CameraModel, Observation};
use crate::geometry::{
    intersect_halfplanes_traced, ClipStats, ConvexPolygon, GeometryError, HalfPlane, Point2,
    EPS_AREA, EPS_GEOM,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimatorError {
    #[error("observation is the out-of-view sentinel")]
    SentinelObservation,
    #[error("every observation is out of view; nothing constrains the camera")]
    NoConstraints,
    #[error("{points} points but {observations} observations")]
    LengthMismatch { points: usize, observations: usize },
    #[error("consistency region is empty")]
    EmptyRegion,
    #[error("consistency region is degenerate (area {area:e} m²)")]
    DegenerateRegion { area: f64 },
    #[error("no candidate orientation has a non-empty consistency region")]
    AllSlicesEmpty,
    #[error("invalid sweep configuration: {0}")]
    InvalidSweep(&'static str),
    #[error("collinear bound needs positive inputs (f={f}, b={b}, w={w})")]
    NonPositiveInput { f: f64, b: f64, w: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// The location-consistency region for one candidate orientation.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencySlice {
    pub alpha: f64,
    pub region: ConvexPolygon,
    pub area: f64,
    /// `None` when the region is empty or degenerate.
    pub centroid: Option<Point2>,
    /// Set when the region touches the world box, meaning the box rather
    /// than the observations bounds it.
    pub clipped: bool,
    pub stats: ClipStats,
}

impl ConsistencySlice {
    pub fn is_usable(&self) -> bool {
        self.centroid.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseEstimate {
    pub t_x: f64,
    pub t_z: f64,
    /// Present only when the orientation was estimated.
    pub theta: Option<f64>,
    pub region_clipped: bool,
}

impl PoseEstimate {
    pub fn location(&self) -> Point2 {
        Point2::new(self.t_x, self.t_z)
    }
}

/// Orientation sweep: a coarse uniform pass over the full circle locates
/// the band of angles with non-empty regions, then `fine` slices are spread
/// uniformly across that band (padded by one coarse step on either side).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepConfig {
    pub coarse: usize,
    pub fine: usize,
    /// Upper bound on the coarse resolution when the band is narrower than a
    /// coarse step and has to be searched for by repeated doubling.
    pub max_coarse: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { coarse: 720, fine: 2048, max_coarse: 720 << 8 }
    }
}

impl SweepConfig {
    pub fn with_fine(fine: usize) -> Self {
        Self { fine, ..Self::default() }
    }

    fn validate(&self) -> Result<(), EstimatorError> {
        if self.coarse < 2 {
            return Err(EstimatorError::InvalidSweep("coarse slice count must be at least 2"));
        }
        if self.fine < 2 {
            return Err(EstimatorError::InvalidSweep("fine slice count must be at least 2"));
        }
        if self.max_coarse < self.coarse {
            return Err(EstimatorError::InvalidSweep("max_coarse below coarse"));
        }
        Ok(())
    }
}

/// The two half-planes bounding the wedge of camera locations that see `s`
/// inside the pixel centred at `q`, both in `≥ 0` form.
///
/// The first encodes `p ≤ q + w/2`, the second `p ≥ q − w/2`. With
/// `u = q ± w/2` the raw constraint `u·depth − f·lateral ≥ 0` expands to
/// `a = f cosθ + u sinθ`, `b = f sinθ − u cosθ`,
/// `c = u (s_z cosθ − s_x sinθ) − f (s_x cosθ + s_z sinθ)`; the lower
/// bound is the negation of the same expression.
pub fn point_halfplanes(
    cam: &CameraModel,
    theta: f64,
    s: Point2,
    q: Observation,
) -> Result<(HalfPlane, HalfPlane), EstimatorError> {
    let q = q.value().ok_or(EstimatorError::SentinelObservation)?;
    let (sin, cos) = theta.sin_cos();
    Ok(wedge(cam.focal_length(), cam.pixel_width(), sin, cos, s, q))
}

#[inline]
fn wedge(f: f64, w: f64, sin: f64, cos: f64, s: Point2, q: f64) -> (HalfPlane, HalfPlane) {
    let coeffs = |u: f64| {
        (
            f * cos + u * sin,
            f * sin - u * cos,
            u * (s.z * cos - s.x * sin) - f * (s.x * cos + s.z * sin),
        )
    };
    let (a, b, c) = coeffs(q + 0.5 * w);
    let upper = HalfPlane::new(a, b, c).expect("wedge normal has norm ≥ f");
    let (a, b, c) = coeffs(q - 0.5 * w);
    let lower = HalfPlane::at_most(a, b, c).expect("wedge normal has norm ≥ f");
    (upper, lower)
}

fn check_lengths(points: &[Point2], observations: &[Observation]) -> Result<(), EstimatorError> {
    if points.len() != observations.len() {
        return Err(EstimatorError::LengthMismatch {
            points: points.len(),
            observations: observations.len(),
        });
    }
    Ok(())
}

/// Half-planes for every in-view correspondence at orientation `theta`.
pub fn region_halfplanes(
    cam: &CameraModel,
    theta: f64,
    points: &[Point2],
    observations: &[Observation],
) -> Vec<HalfPlane> {
    let (sin, cos) = theta.sin_cos();
    let (f, w) = (cam.focal_length(), cam.pixel_width());
    let mut hps = Vec::with_capacity(2 * points.len());
    for (&s, q) in points.iter().zip(observations) {
        if let Some(q) = q.value() {
            let (upper, lower) = wedge(f, w, sin, cos, s, q);
            hps.push(upper);
            hps.push(lower);
        }
    }
    hps
}

/// Clips `world` by the wedges of all in-view observations at orientation
/// `theta`.
pub fn location_region(
    cam: &CameraModel,
    theta: f64,
    points: &[Point2],
    observations: &[Observation],
    world: &ConvexPolygon,
) -> Result<ConsistencySlice, EstimatorError> {
    check_lengths(points, observations)?;
    if observations.iter().all(Observation::is_out_of_view) {
        return Err(EstimatorError::NoConstraints);
    }
    Ok(slice_at(cam, theta, points, observations, world))
}

fn slice_at(
    cam: &CameraModel,
    alpha: f64,
    points: &[Point2],
    observations: &[Observation],
    world: &ConvexPolygon,
) -> ConsistencySlice {
    let hps = region_halfplanes(cam, alpha, points, observations);
    let (region, stats) = intersect_halfplanes_traced(&hps, world);
    let area = region.area();
    let centroid = if area > EPS_AREA { region.centroid().ok() } else { None };
    let clipped = touches_boundary(&region, world);
    ConsistencySlice { alpha, region, area, centroid, clipped, stats }
}

fn touches_boundary(region: &ConvexPolygon, world: &ConvexPolygon) -> bool {
    region.vertices().iter().any(|&v| {
        world.edges().any(|(a, b)| {
            let edge = b - a;
            (edge.cross(v - a) / edge.norm()).abs() <= EPS_GEOM
        })
    })
}

/// Centroid of the consistency region at a known orientation.
pub fn estimate_location(
    cam: &CameraModel,
    theta: f64,
    points: &[Point2],
    observations: &[Observation],
    world: &ConvexPolygon,
) -> Result<PoseEstimate, EstimatorError> {
    let slice = location_region(cam, theta, points, observations, world)?;
    if slice.region.is_empty() {
        return Err(EstimatorError::EmptyRegion);
    }
    let c = slice.centroid.ok_or(EstimatorError::DegenerateRegion { area: slice.area })?;
    Ok(PoseEstimate { t_x: c.x, t_z: c.z, theta: None, region_clipped: slice.clipped })
}

/// Area-weighted mean of slice centroids and angles. Slice angles must
/// already be unwrapped onto a contiguous interval; the returned angle is
/// normalized to `[0, 2π)`. Degenerate slices carry no weight.
pub fn weighted_pose(slices: &[ConsistencySlice]) -> Result<PoseEstimate, EstimatorError> {
    let (mut total, mut x, mut z, mut alpha) = (0.0, 0.0, 0.0, 0.0);
    let mut clipped = false;
    // index order keeps the sum deterministic
    for s in slices {
        if let Some(c) = s.centroid {
            total += s.area;
            x += s.area * c.x;
            z += s.area * c.z;
            alpha += s.area * s.alpha;
            clipped |= s.clipped;
        }
    }
    if total <= 0.0 {
        return Err(EstimatorError::AllSlicesEmpty);
    }
    Ok(PoseEstimate {
        t_x: x / total,
        t_z: z / total,
        theta: Some(normalize_angle(alpha / total)),
        region_clipped: clipped,
    })
}

/// Evaluates slices at the given angles in parallel, preserving order.
pub fn sweep_slices(
    cam: &CameraModel,
    angles: &[f64],
    points: &[Point2],
    observations: &[Observation],
    world: &ConvexPolygon,
) -> Vec<ConsistencySlice> {
    angles
        .par_iter()
        .map(|&a| slice_at(cam, a, points, observations, world))
        .collect()
}

/// Returns `(start, len)` of the shortest circular run of indices covering
/// every `true` entry, i.e. the complement of the longest run of `false`.
fn covering_band(nonempty: &[bool]) -> Option<(usize, usize)> {
    let k = nonempty.len();
    let first = nonempty.iter().position(|&b| b)?;
    // walk the circle starting at a non-empty index and find the longest gap
    let (mut best_gap, mut best_end) = (0usize, first);
    let mut gap = 0usize;
    for step in 1..=k {
        let i = (first + step) % k;
        if nonempty[i] {
            if gap > best_gap {
                best_gap = gap;
                best_end = i;
            }
            gap = 0;
        } else {
            gap += 1;
        }
    }
    // band starts right after the longest gap
    Some((best_end, k - best_gap))
}

/// Full pose estimate from an orientation sweep.
pub fn estimate_pose(
    cam: &CameraModel,
    points: &[Point2],
    observations: &[Observation],
    world: &ConvexPolygon,
    sweep: &SweepConfig,
) -> Result<PoseEstimate, EstimatorError> {
    sweep.validate()?;
    check_lengths(points, observations)?;
    if observations.iter().all(Observation::is_out_of_view) {
        return Err(EstimatorError::NoConstraints);
    }

    let mut k = sweep.coarse;
    let (start, len) = loop {
        let step = TAU / k as f64;
        let angles: Vec<f64> = (0..k).map(|i| i as f64 * step).collect();
        let nonempty: Vec<bool> = angles
            .par_iter()
            .map(|&a| {
                let hps = region_halfplanes(cam, a, points, observations);
                !intersect_halfplanes_traced(&hps, world).0.is_empty()
            })
            .collect();
        if let Some(band) = covering_band(&nonempty) {
            break band;
        }
        if 2 * k > sweep.max_coarse {
            return Err(EstimatorError::AllSlicesEmpty);
        }
        k *= 2;
    };

    let step = TAU / k as f64;
    let lo = (start as f64 - 1.0) * step;
    let hi = (start + len) as f64 * step;
    let h = (hi - lo) / sweep.fine as f64;
    let angles: Vec<f64> = (0..sweep.fine).map(|i| lo + (i as f64 + 0.5) * h).collect();
    let slices = sweep_slices(cam, &angles, points, observations, world);
    weighted_pose(&slices)
}

/// Camera-to-line distance below which collinear scenes enjoy quadratic
/// error decay: `f·b / (2w)`, with `b` the largest distance between points.
pub fn collinear_decay_bound(f: f64, b: f64, w: f64) -> Result<f64, EstimatorError> {
    if !(f > 0.0 && b > 0.0 && w > 0.0) {
        return Err(EstimatorError::NonPositiveInput { f, b, w });
    }
    Ok(f * b / (2.0 * w))
}
