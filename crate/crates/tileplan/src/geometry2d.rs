//! Planar geometric primitives and predicates.
//!
//! Everything here is conservative with respect to contact: touching
//! boundaries count as intersection, so a planner built on these
//! predicates never certifies a grazing path as free. Orientation
//! tests use the absolute tolerance [`EPS_GEO`], which is adequate for
//! the unit-scale scenes this crate works with.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute tolerance for orientation and on-segment tests.
pub const EPS_GEO: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon has non-finite coordinates")]
    NonFinite,
    #[error("polygon is self-intersecting")]
    SelfIntersecting,
    #[error("polygon has (near-)zero area")]
    ZeroArea,
    #[error("all hull input points are collinear")]
    DegenerateHull,
    #[error("convex_hull needs at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("inflate requires a convex polygon")]
    NonConvexInput,
    #[error("negative inflation margin {0}")]
    NegativeMargin(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub fn add(self, other: Point2) -> Point2 {
        Point2::new(self.x + other.x, self.y + other.y)
    }

    pub fn sub(self, other: Point2) -> Point2 {
        Point2::new(self.x - other.x, self.y - other.y)
    }

    pub fn scale(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the cross product, treating both as vectors.
    pub fn cross(self, other: Point2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Point2) -> f64 {
        self.sub(other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: Point2,
    pub b: Point2,
}

impl Segment {
    pub const fn new(a: Point2, b: Point2) -> Self {
        Segment { a, b }
    }

    pub fn aabb(&self) -> Aabb {
        Aabb {
            min: Point2::new(self.a.x.min(self.b.x), self.a.y.min(self.b.y)),
            max: Point2::new(self.a.x.max(self.b.x), self.a.y.max(self.b.y)),
        }
    }
}

/// Axis-aligned bounding box, `min` componentwise below `max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Point2,
    pub max: Point2,
}

impl Aabb {
    pub fn new(min: Point2, max: Point2) -> Self {
        debug_assert!(min.x <= max.x && min.y <= max.y);
        Aabb { min, max }
    }

    pub fn of_points(points: &[Point2]) -> Aabb {
        let mut min = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut max = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in points {
            min.x = min.x.min(p.x);
            min.y = min.y.min(p.y);
            max.x = max.x.max(p.x);
            max.y = max.y.max(p.y);
        }
        Aabb { min, max }
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn intersects(&self, other: &Aabb) -> bool {
        self.min.x <= other.max.x
            && other.min.x <= self.max.x
            && self.min.y <= other.max.y
            && other.min.y <= self.max.y
    }

    pub fn grown(&self, pad: f64) -> Aabb {
        Aabb {
            min: Point2::new(self.min.x - pad, self.min.y - pad),
            max: Point2::new(self.max.x + pad, self.max.y + pad),
        }
    }
}

/// Simple polygon with counter-clockwise vertex order.
///
/// Serde passes vertices through unvalidated (trusted formats such as
/// roadmap bundles carry near-degenerate swept slivers that the
/// checked constructor would refuse); untrusted inputs go through
/// [`Polygon::new`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polygon {
    verts: Vec<Point2>,
}

impl Polygon {
    /// Validates simplicity and flips clockwise input to counter-clockwise.
    pub fn new(mut verts: Vec<Point2>) -> Result<Polygon, GeometryError> {
        if verts.len() < 3 {
            return Err(GeometryError::TooFewVertices(verts.len()));
        }
        if verts.iter().any(|p| !p.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let area = signed_area(&verts);
        if area.abs() <= EPS_GEO {
            return Err(GeometryError::ZeroArea);
        }
        if area < 0.0 {
            verts.reverse();
        }
        let poly = Polygon { verts };
        if poly.is_self_intersecting() {
            return Err(GeometryError::SelfIntersecting);
        }
        Ok(poly)
    }

    /// Wraps vertices the caller guarantees form a simple CCW polygon.
    /// Used for generated swept-volume pieces whose slivers fall below
    /// the validation thresholds.
    pub(crate) fn from_ccw_unchecked(verts: Vec<Point2>) -> Polygon {
        debug_assert!(verts.len() >= 3);
        Polygon { verts }
    }

    /// Re-runs the construction checks, for polygons that arrived via
    /// deserialization.
    pub fn revalidate(&self) -> Result<Polygon, GeometryError> {
        Polygon::new(self.verts.clone())
    }

    /// Axis-aligned rectangle helper.
    pub fn rect(min: Point2, max: Point2) -> Result<Polygon, GeometryError> {
        Polygon::new(vec![
            min,
            Point2::new(max.x, min.y),
            max,
            Point2::new(min.x, max.y),
        ])
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.verts
    }

    pub fn edges(&self) -> impl Iterator<Item = Segment> + '_ {
        let n = self.verts.len();
        (0..n).map(move |i| Segment::new(self.verts[i], self.verts[(i + 1) % n]))
    }

    pub fn aabb(&self) -> Aabb {
        Aabb::of_points(&self.verts)
    }

    pub fn is_convex(&self) -> bool {
        let n = self.verts.len();
        (0..n).all(|i| {
            let a = self.verts[i];
            let b = self.verts[(i + 1) % n];
            let c = self.verts[(i + 2) % n];
            b.sub(a).cross(c.sub(b)) >= -EPS_GEO
        })
    }

    fn is_self_intersecting(&self) -> bool {
        let n = self.verts.len();
        for i in 0..n {
            let si = Segment::new(self.verts[i], self.verts[(i + 1) % n]);
            for j in (i + 1)..n {
                // Skip edges sharing a vertex; they touch by construction.
                if j == i || (j + 1) % n == i || (i + 1) % n == j {
                    continue;
                }
                let sj = Segment::new(self.verts[j], self.verts[(j + 1) % n]);
                if seg_seg_intersect(&si, &sj) {
                    return true;
                }
            }
        }
        false
    }
}

pub fn signed_area(verts: &[Point2]) -> f64 {
    let n = verts.len();
    let mut acc = 0.0;
    for i in 0..n {
        let a = verts[i];
        let b = verts[(i + 1) % n];
        acc += a.cross(b);
    }
    acc / 2.0
}

/// Sign of the turn a->b->c: +1 left, -1 right, 0 within tolerance.
fn orientation(a: Point2, b: Point2, c: Point2) -> i32 {
    let v = b.sub(a).cross(c.sub(a));
    if v > EPS_GEO {
        1
    } else if v < -EPS_GEO {
        -1
    } else {
        0
    }
}

/// Is q inside the bounding box of segment ab (with tolerance)?
fn in_box(q: Point2, a: Point2, b: Point2) -> bool {
    q.x >= a.x.min(b.x) - EPS_GEO
        && q.x <= a.x.max(b.x) + EPS_GEO
        && q.y >= a.y.min(b.y) - EPS_GEO
        && q.y <= a.y.max(b.y) + EPS_GEO
}

/// Euclidean distance between two closed segments (zero when they
/// intersect).
pub fn seg_seg_distance(s1: &Segment, s2: &Segment) -> f64 {
    if seg_seg_intersect(s1, s2) {
        return 0.0;
    }
    point_segment_distance(s1.a, s2)
        .min(point_segment_distance(s1.b, s2))
        .min(point_segment_distance(s2.a, s1))
        .min(point_segment_distance(s2.b, s1))
}

pub fn point_segment_distance(q: Point2, s: &Segment) -> f64 {
    let ab = s.b.sub(s.a);
    let denom = ab.dot(ab);
    let t = if denom > 0.0 {
        (q.sub(s.a).dot(ab) / denom).clamp(0.0, 1.0)
    } else {
        0.0
    };
    q.dist(s.a.add(ab.scale(t)))
}

/// Closed-segment intersection test. Touching endpoints and collinear
/// overlap both count.
pub fn seg_seg_intersect(s1: &Segment, s2: &Segment) -> bool {
    let (p1, q1, p2, q2) = (s1.a, s1.b, s2.a, s2.b);
    let o1 = orientation(p1, q1, p2);
    let o2 = orientation(p1, q1, q2);
    let o3 = orientation(p2, q2, p1);
    let o4 = orientation(p2, q2, q1);

    if o1 != o2 && o3 != o4 {
        return true;
    }
    (o1 == 0 && in_box(p2, p1, q1))
        || (o2 == 0 && in_box(q2, p1, q1))
        || (o3 == 0 && in_box(p1, p2, q2))
        || (o4 == 0 && in_box(q1, p2, q2))
}

/// Boundary-inclusive point-in-polygon (even-odd rule).
pub fn point_in_polygon(q: Point2, poly: &Polygon) -> bool {
    // On-boundary counts as inside.
    for e in poly.edges() {
        if orientation(e.a, e.b, q) == 0 && in_box(q, e.a, e.b) {
            return true;
        }
    }
    let mut inside = false;
    for e in poly.edges() {
        let (a, b) = (e.a, e.b);
        if (a.y > q.y) != (b.y > q.y) {
            let t = (q.y - a.y) / (b.y - a.y);
            let x = a.x + t * (b.x - a.x);
            if q.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

/// Does the segment hit the polygon? True if it crosses any edge or
/// either endpoint is inside/on the polygon.
pub fn seg_polygon_intersect(s: &Segment, poly: &Polygon) -> bool {
    if !s.aabb().intersects(&poly.aabb()) {
        return false;
    }
    if point_in_polygon(s.a, poly) || point_in_polygon(s.b, poly) {
        return true;
    }
    poly.edges().any(|e| seg_seg_intersect(s, &e))
}

/// Polygon overlap test covering boundary contact and containment
/// either way.
pub fn poly_poly_intersect(p1: &Polygon, p2: &Polygon) -> bool {
    poly_poly_intersect_offset(p1, Point2::ORIGIN, p2)
}

/// Same test with `p1` translated by `offset`, without materializing
/// the translated polygon (the planners screen stored swept pieces at
/// query-dependent positions, and allocating a copy per test would
/// dominate the check).
pub fn poly_poly_intersect_offset(p1: &Polygon, offset: Point2, p2: &Polygon) -> bool {
    let mut bb1 = p1.aabb();
    bb1.min = bb1.min.add(offset);
    bb1.max = bb1.max.add(offset);
    if !bb1.intersects(&p2.aabb()) {
        return false;
    }
    if point_in_polygon(p1.vertices()[0].add(offset), p2) {
        return true;
    }
    if point_in_polygon_offset(p2.vertices()[0], p1, offset) {
        return true;
    }
    let n1 = p1.vertices().len();
    for i in 0..n1 {
        let e1 = Segment::new(
            p1.vertices()[i].add(offset),
            p1.vertices()[(i + 1) % n1].add(offset),
        );
        for e2 in p2.edges() {
            if seg_seg_intersect(&e1, &e2) {
                return true;
            }
        }
    }
    false
}

/// Point-in-polygon with the polygon translated by `offset`.
fn point_in_polygon_offset(q: Point2, poly: &Polygon, offset: Point2) -> bool {
    let shifted = q.sub(offset);
    point_in_polygon(shifted, poly)
}

/// Counter-clockwise convex hull (Andrew monotone chain). Collinear
/// input is rejected; interior and boundary-collinear points are
/// dropped from the output.
pub fn convex_hull(pts: &[Point2]) -> Result<Polygon, GeometryError> {
    convex_hull_eps(pts, EPS_GEO)
}

/// Hull with zero collinearity tolerance: never discards a point that
/// sticks out by any positive amount. The swept-volume construction
/// needs this, since its inflation margins can match the true motion
/// deviation with almost no slack.
pub(crate) fn convex_hull_exact(pts: &[Point2]) -> Result<Polygon, GeometryError> {
    convex_hull_eps(pts, 0.0)
}

fn convex_hull_eps(pts: &[Point2], eps: f64) -> Result<Polygon, GeometryError> {
    if pts.len() < 3 {
        return Err(GeometryError::TooFewPoints(pts.len()));
    }
    let mut sorted: Vec<Point2> = pts.to_vec();
    sorted.sort_by(|a, b| (a.x, a.y).partial_cmp(&(b.x, b.y)).unwrap());
    sorted.dedup_by(|a, b| a.x == b.x && a.y == b.y);

    let chain = |points: &[Point2]| {
        let mut out: Vec<Point2> = Vec::new();
        for &p in points {
            while out.len() >= 2 {
                let a = out[out.len() - 2];
                let b = out[out.len() - 1];
                if b.sub(a).cross(p.sub(a)) <= eps {
                    out.pop();
                } else {
                    break;
                }
            }
            out.push(p);
        }
        out
    };

    let mut lower = chain(&sorted);
    let rev: Vec<Point2> = sorted.iter().rev().copied().collect();
    let mut upper = chain(&rev);
    lower.pop();
    upper.pop();
    lower.append(&mut upper);
    if lower.len() < 3 {
        return Err(GeometryError::DegenerateHull);
    }
    if signed_area(&lower) <= 0.0 {
        return Err(GeometryError::DegenerateHull);
    }
    Ok(Polygon { verts: lower })
}

/// Eight headings used for the octagonal disc approximation.
const OCT_DIRS: [(f64, f64); 8] = [
    (1.0, 0.0),
    (std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2),
    (0.0, 1.0),
    (-std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2),
    (-1.0, 0.0),
    (-std::f64::consts::FRAC_1_SQRT_2, -std::f64::consts::FRAC_1_SQRT_2),
    (0.0, -1.0),
    (std::f64::consts::FRAC_1_SQRT_2, -std::f64::consts::FRAC_1_SQRT_2),
];

/// Outer approximation of the Minkowski sum of a convex polygon with a
/// disc of radius `margin`. Each vertex is replaced by a circumscribed
/// octagon, so the result always contains the exact sum.
pub fn inflate(poly: &Polygon, margin: f64) -> Result<Polygon, GeometryError> {
    if margin < 0.0 || !margin.is_finite() {
        return Err(GeometryError::NegativeMargin(margin));
    }
    if !poly.is_convex() {
        return Err(GeometryError::NonConvexInput);
    }
    if margin == 0.0 {
        return Ok(poly.clone());
    }
    // Circumradius of the octagon that contains the disc.
    let r = margin / (std::f64::consts::PI / 8.0).cos();
    let mut pts = Vec::with_capacity(poly.vertices().len() * 8);
    for &v in poly.vertices() {
        for (dx, dy) in OCT_DIRS {
            pts.push(Point2::new(v.x + r * dx, v.y + r * dy));
        }
    }
    // The exact-tolerance hull never trims an octagon corner inward,
    // which would silently shave the containment guarantee.
    convex_hull_exact(&pts)
}
