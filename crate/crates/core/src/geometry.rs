//! Planar geometry kernel: half-planes, convex polygons and the single-pass
//! clip that intersects one with the other.
//!
//! Coordinates are `(x, z)` in metres. A half-plane is always stored in the
//! `a·x + b·z + c ≥ 0` form; a `≤` constraint is represented by negating all
//! three coefficients.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Vertex/side tolerance in metres.
pub const EPS_GEOM: f64 = 1e-9;
/// Regions with area at or below this (m²) are treated as degenerate.
pub const EPS_AREA: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("half-plane normal (a, b) must be non-zero")]
    ZeroNormal,
    #[error("non-finite coordinate in {0}")]
    NonFinite(&'static str),
    #[error("polygon needs zero or at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon vertices are not strictly convex in counter-clockwise order")]
    NotConvex,
    #[error("region is empty or degenerate (area {area:e} m²)")]
    DegenerateRegion { area: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub z: f64,
}

impl Point2 {
    pub const fn new(x: f64, z: f64) -> Self {
        Self { x, z }
    }

    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.z * other.z
    }

    /// z-component of the 3-D cross product; positive when `other` is
    /// counter-clockwise from `self`.
    pub fn cross(self, other: Self) -> f64 {
        self.x * other.z - self.z * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.z)
    }

    pub fn distance(self, other: Self) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.z.is_finite()
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Self) -> Self {
        Point2::new(self.x + rhs.x, self.z + rhs.z)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Self) -> Self {
        Point2::new(self.x - rhs.x, self.z - rhs.z)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, rhs: f64) -> Self {
        Point2::new(self.x * rhs, self.z * rhs)
    }
}

/// The closed set `{(x, z) : a·x + b·z + c ≥ 0}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfPlane {
    a: f64,
    b: f64,
    c: f64,
}

impl HalfPlane {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self, GeometryError> {
        if !(a.is_finite() && b.is_finite() && c.is_finite()) {
            return Err(GeometryError::NonFinite("half-plane"));
        }
        if a == 0.0 && b == 0.0 {
            return Err(GeometryError::ZeroNormal);
        }
        Ok(Self { a, b, c })
    }

    /// Builds the half-plane for `a·x + b·z + c ≤ 0`.
    pub fn at_most(a: f64, b: f64, c: f64) -> Result<Self, GeometryError> {
        Self::new(-a, -b, -c)
    }

    pub fn coefficients(&self) -> (f64, f64, f64) {
        (self.a, self.b, self.c)
    }

    pub fn negated(&self) -> Self {
        Self { a: -self.a, b: -self.b, c: -self.c }
    }

    /// Raw value of `a·x + b·z + c`.
    pub fn eval(&self, p: Point2) -> f64 {
        self.a * p.x + self.b * p.z + self.c
    }

    /// Signed Euclidean distance to the boundary line, positive inside.
    pub fn signed_distance(&self, p: Point2) -> f64 {
        self.eval(p) / self.a.hypot(self.b)
    }

    pub fn contains(&self, p: Point2) -> bool {
        self.signed_distance(p) >= -EPS_GEOM
    }
}

/// Convex polygon with counter-clockwise vertices. The empty polygon has no
/// vertices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConvexPolygon {
    vertices: Vec<Point2>,
}

impl ConvexPolygon {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Validates CCW order and strict convexity.
    pub fn new(vertices: Vec<Point2>) -> Result<Self, GeometryError> {
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite("polygon vertex"));
        }
        match vertices.len() {
            0 => return Ok(Self::empty()),
            1 | 2 => return Err(GeometryError::TooFewVertices(vertices.len())),
            _ => {}
        }
        let n = vertices.len();
        for i in 0..n {
            let prev = vertices[(i + n - 1) % n];
            let cur = vertices[i];
            let next = vertices[(i + 1) % n];
            let edge = next - prev;
            let len = edge.norm();
            if len <= EPS_GEOM || edge.cross(cur - prev) / len > -EPS_GEOM {
                // cur must sit strictly to the right of prev -> next, i.e. the
                // turn prev -> cur -> next is a left turn.
                return Err(GeometryError::NotConvex);
            }
        }
        Ok(Self { vertices })
    }

    /// Axis-aligned rectangle `[min.x, max.x] × [min.z, max.z]`.
    pub fn rectangle(min: Point2, max: Point2) -> Result<Self, GeometryError> {
        Self::new(vec![
            min,
            Point2::new(max.x, min.z),
            max,
            Point2::new(min.x, max.z),
        ])
    }

    /// Square `[-half, half]²`.
    pub fn centered_square(half: f64) -> Result<Self, GeometryError> {
        Self::rectangle(Point2::new(-half, -half), Point2::new(half, half))
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Iterates over directed edges `(v_i, v_{i+1})`.
    pub fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Intersection with `hp`. Linear in the vertex count.
    pub fn clip(&self, hp: &HalfPlane) -> ConvexPolygon {
        let mut out = Vec::with_capacity(self.vertices.len() + 1);
        clip_into(&self.vertices, hp, &mut out);
        ConvexPolygon { vertices: out }
    }

    /// Shoelace area; zero for the empty polygon.
    pub fn area(&self) -> f64 {
        signed_area(&self.vertices).max(0.0)
    }

    /// Area centroid.
    pub fn centroid(&self) -> Result<Point2, GeometryError> {
        let area = self.area();
        if area <= EPS_AREA {
            return Err(GeometryError::DegenerateRegion { area });
        }
        // Accumulate relative to the first vertex so that small regions far
        // from the origin keep their precision.
        let origin = self.vertices[0];
        let (mut a2, mut cx, mut cz) = (0.0, 0.0, 0.0);
        for (p, q) in self.edges() {
            let (p, q) = (p - origin, q - origin);
            let w = p.cross(q);
            a2 += w;
            cx += (p.x + q.x) * w;
            cz += (p.z + q.z) * w;
        }
        let k = 1.0 / (3.0 * a2);
        Ok(Point2::new(origin.x + cx * k, origin.z + cz * k))
    }

    /// True when `p` is inside or within [`EPS_GEOM`] of the boundary.
    pub fn contains(&self, p: Point2) -> bool {
        if self.vertices.len() < 3 {
            return false;
        }
        self.edges().all(|(a, b)| {
            let edge = b - a;
            edge.cross(p - a) / edge.norm() >= -EPS_GEOM
        })
    }

    /// Largest distance between two vertices.
    pub fn diameter(&self) -> f64 {
        let mut best: f64 = 0.0;
        for (i, &p) in self.vertices.iter().enumerate() {
            for &q in &self.vertices[i + 1..] {
                best = best.max(p.distance(q));
            }
        }
        best
    }
}

fn signed_area(vertices: &[Point2]) -> f64 {
    let n = vertices.len();
    if n < 3 {
        return 0.0;
    }
    let origin = vertices[0];
    let mut twice = 0.0;
    for i in 1..n - 1 {
        twice += (vertices[i] - origin).cross(vertices[i + 1] - origin);
    }
    0.5 * twice
}

/// Sutherland–Hodgman pass against a single half-plane, followed by merging
/// of coincident and collinear vertices.
fn clip_into(input: &[Point2], hp: &HalfPlane, out: &mut Vec<Point2>) {
    out.clear();
    let n = input.len();
    if n < 3 {
        return;
    }
    let inv_norm = 1.0 / hp.a.hypot(hp.b);
    let dist = |p: Point2| hp.eval(p) * inv_norm;

    let mut prev = input[n - 1];
    let mut d_prev = dist(prev);
    let mut all_inside = true;
    for &cur in input {
        let d_cur = dist(cur);
        let cur_in = d_cur >= -EPS_GEOM;
        let prev_in = d_prev >= -EPS_GEOM;
        if cur_in != prev_in {
            let t = d_prev / (d_prev - d_cur);
            out.push(prev + (cur - prev) * t);
        }
        if cur_in {
            out.push(cur);
        } else {
            all_inside = false;
        }
        prev = cur;
        d_prev = d_cur;
    }
    if all_inside {
        out.clear();
        out.extend_from_slice(input);
        return;
    }
    simplify(out);
}

/// Removes vertices closer than [`EPS_GEOM`] to their predecessor and
/// vertices lying within [`EPS_GEOM`] of the line through their neighbours.
/// Collapses to empty when fewer than three vertices survive.
fn simplify(vertices: &mut Vec<Point2>) {
    vertices.dedup_by(|b, a| a.distance(*b) <= EPS_GEOM);
    while vertices.len() > 1 && vertices[0].distance(*vertices.last().unwrap()) <= EPS_GEOM {
        vertices.pop();
    }
    let mut changed = true;
    while changed && vertices.len() >= 3 {
        changed = false;
        let n = vertices.len();
        for i in 0..n {
            let prev = vertices[(i + n - 1) % n];
            let cur = vertices[i];
            let next = vertices[(i + 1) % n];
            let edge = next - prev;
            let len = edge.norm();
            if len <= EPS_GEOM || edge.cross(cur - prev).abs() / len <= EPS_GEOM {
                vertices.remove(i);
                changed = true;
                break;
            }
        }
    }
    if vertices.len() < 3 {
        vertices.clear();
    }
}

/// Counters gathered while intersecting a sequence of half-planes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ClipStats {
    /// Half-planes actually applied (clipping stops once the region is empty).
    pub clips: usize,
    /// Largest vertex count seen on any intermediate polygon.
    pub max_vertices: usize,
}

/// Clips `bounds` by every half-plane in turn.
pub fn intersect_halfplanes(hps: &[HalfPlane], bounds: &ConvexPolygon) -> ConvexPolygon {
    intersect_halfplanes_traced(hps, bounds).0
}

/// [`intersect_halfplanes`] plus intermediate vertex-count instrumentation.
pub fn intersect_halfplanes_traced(
    hps: &[HalfPlane],
    bounds: &ConvexPolygon,
) -> (ConvexPolygon, ClipStats) {
    let mut current = bounds.vertices.clone();
    let mut scratch = Vec::with_capacity(current.len() + 4);
    let mut stats = ClipStats { clips: 0, max_vertices: current.len() };
    for hp in hps {
        if current.is_empty() {
            break;
        }
        clip_into(&current, hp, &mut scratch);
        std::mem::swap(&mut current, &mut scratch);
        stats.clips += 1;
        stats.max_vertices = stats.max_vertices.max(current.len());
    }
    if signed_area(&current) <= EPS_AREA {
        current.clear();
    }
    (ConvexPolygon { vertices: current }, stats)
}
