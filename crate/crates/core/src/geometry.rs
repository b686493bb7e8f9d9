//! Planar convex-polygon kernel: boxes, danger spaces, SAT overlap,
//! GJK distance and clipped overlap area.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("non-finite coordinate at vertex {0}")]
    NonFinite(usize),
    #[error("polygon is not strictly convex (vertex {0})")]
    NotConvex(usize),
    #[error("polygon vertices are clockwise")]
    Clockwise,
    #[error("invalid dimensions: length {length}, width {width}")]
    BadDimensions { length: f64, width: f64 },
    #[error("negative danger space length {0}")]
    NegativeLength(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn perp(self) -> Point {
        Point::new(-self.y, self.x)
    }

    pub fn from_angle(theta: f64) -> Point {
        Point::new(theta.cos(), theta.sin())
    }

    pub fn rotate(self, theta: f64) -> Point {
        let (s, c) = theta.sin_cos();
        Point::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, k: f64) -> Point {
        Point::new(self.x * k, self.y * k)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

/// Position and heading of a rigid body.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Pose { x, y, heading }
    }

    pub fn position(&self) -> Point {
        Point::new(self.x, self.y)
    }

    pub fn forward(&self) -> Point {
        Point::from_angle(self.heading)
    }

    pub fn apply(&self, p: Point) -> Point {
        p.rotate(self.heading) + self.position()
    }
}

/// Wrap an angle into (-pi, pi].
pub fn normalize_angle(theta: f64) -> f64 {
    let mut a = theta % (2.0 * PI);
    if a <= -PI {
        a += 2.0 * PI;
    } else if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// Strictly convex, counter-clockwise polygon.
///
/// A polygon may also be *inert*: the zero-depth region produced by a
/// danger space of length zero. Inert polygons never overlap anything.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexPolygon {
    vertices: Vec<Point>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    inert: bool,
}

const CONVEX_TOL: f64 = 1e-12;

impl ConvexPolygon {
    /// Validates CCW strict convexity.
    pub fn new(vertices: Vec<Point>) -> Result<Self, GeometryError> {
        match orientation(&vertices)? {
            Winding::Ccw => Ok(ConvexPolygon { vertices, inert: false }),
            Winding::Cw => Err(GeometryError::Clockwise),
        }
    }

    /// Accepts either winding, reversing clockwise input.
    pub fn from_any_winding(mut vertices: Vec<Point>) -> Result<Self, GeometryError> {
        if orientation(&vertices)? == Winding::Cw {
            vertices.reverse();
        }
        Ok(ConvexPolygon { vertices, inert: false })
    }

    /// Convex hull of a point cloud (monotone chain). Collinear points are dropped.
    pub fn hull(points: &[Point]) -> Result<Self, GeometryError> {
        let mut pts: Vec<Point> = points.to_vec();
        if let Some(i) = pts.iter().position(|p| !p.is_finite()) {
            return Err(GeometryError::NonFinite(i));
        }
        pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
        pts.dedup();
        if pts.len() < 3 {
            return Err(GeometryError::TooFewVertices(pts.len()));
        }
        let mut hull: Vec<Point> = Vec::with_capacity(pts.len() * 2);
        for pass in 0..2 {
            let start = hull.len();
            let iter: Box<dyn Iterator<Item = &Point>> =
                if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
            for &p in iter {
                while hull.len() >= start + 2 {
                    let a = hull[hull.len() - 2];
                    let b = hull[hull.len() - 1];
                    if (b - a).cross(p - a) <= 0.0 {
                        hull.pop();
                    } else {
                        break;
                    }
                }
                hull.push(p);
            }
            hull.pop();
        }
        ConvexPolygon::new(hull)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn is_inert(&self) -> bool {
        self.inert
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn area(&self) -> f64 {
        shoelace(&self.vertices).max(0.0)
    }

    pub fn centroid(&self) -> Point {
        let n = self.vertices.len() as f64;
        let s = self.vertices.iter().fold(Point::default(), |acc, &p| acc + p);
        s * (1.0 / n)
    }

    /// Closed containment test.
    pub fn contains(&self, p: Point) -> bool {
        self.edges().all(|(a, b)| (b - a).cross(p - a) >= 0.0)
    }

    pub fn distance_to_point(&self, p: Point) -> f64 {
        if self.contains(p) {
            return 0.0;
        }
        self.edges()
            .map(|(a, b)| closest_on_segment(a - p, b - p).0.norm())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn transformed(&self, pose: &Pose) -> ConvexPolygon {
        ConvexPolygon {
            vertices: self.vertices.iter().map(|&p| pose.apply(p)).collect(),
            inert: self.inert,
        }
    }

    /// Extent of the polygon projected onto `axis`.
    pub fn project(&self, axis: Point) -> (f64, f64) {
        project_points(&self.vertices, axis)
    }

    fn support(&self, d: Point) -> Point {
        let mut best = self.vertices[0];
        let mut best_v = best.dot(d);
        for &p in &self.vertices[1..] {
            let v = p.dot(d);
            if v > best_v {
                best = p;
                best_v = v;
            }
        }
        best
    }
}

#[derive(Debug, PartialEq, Eq)]
enum Winding {
    Ccw,
    Cw,
}

fn orientation(vertices: &[Point]) -> Result<Winding, GeometryError> {
    let n = vertices.len();
    if n < 3 {
        return Err(GeometryError::TooFewVertices(n));
    }
    if let Some(i) = vertices.iter().position(|p| !p.is_finite()) {
        return Err(GeometryError::NonFinite(i));
    }
    let mut sign = 0.0f64;
    let mut turning = 0.0;
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        let c = vertices[(i + 2) % n];
        let e1 = b - a;
        let e2 = c - b;
        let cr = e1.cross(e2);
        let scale = e1.norm() * e2.norm();
        if scale == 0.0 || cr.abs() <= CONVEX_TOL * scale {
            return Err(GeometryError::NotConvex((i + 1) % n));
        }
        if sign == 0.0 {
            sign = cr.signum();
        } else if cr.signum() != sign {
            return Err(GeometryError::NotConvex((i + 1) % n));
        }
        turning += cr.atan2(e1.dot(e2));
    }
    // A star polygon turns all one way but winds more than once.
    if (turning.abs() - 2.0 * PI).abs() > 1e-6 {
        return Err(GeometryError::NotConvex(0));
    }
    Ok(if sign > 0.0 { Winding::Ccw } else { Winding::Cw })
}

fn shoelace(pts: &[Point]) -> f64 {
    let n = pts.len();
    if n < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for i in 0..n {
        s += pts[i].cross(pts[(i + 1) % n]);
    }
    0.5 * s
}

fn project_points(pts: &[Point], axis: Point) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for p in pts {
        let v = p.dot(axis);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (lo, hi)
}

fn check_dims(length: f64, width: f64) -> Result<(), GeometryError> {
    if !(length.is_finite() && width.is_finite() && length > 0.0 && width > 0.0) {
        return Err(GeometryError::BadDimensions { length, width });
    }
    Ok(())
}

/// Oriented rectangle centred on the pose, long axis along the heading.
pub fn oriented_box(pose: &Pose, length: f64, width: f64) -> Result<ConvexPolygon, GeometryError> {
    check_dims(length, width)?;
    if !(pose.x.is_finite() && pose.y.is_finite() && pose.heading.is_finite()) {
        return Err(GeometryError::NonFinite(0));
    }
    let (hl, hw) = (length / 2.0, width / 2.0);
    let local = [
        Point::new(-hl, -hw),
        Point::new(hl, -hw),
        Point::new(hl, hw),
        Point::new(-hl, hw),
    ];
    Ok(ConvexPolygon {
        vertices: local.iter().map(|&p| pose.apply(p)).collect(),
        inert: false,
    })
}

/// Rectangle extending `ds_length` forward from the front face of the box.
pub fn danger_space(
    pose: &Pose,
    length: f64,
    width: f64,
    ds_length: f64,
) -> Result<ConvexPolygon, GeometryError> {
    check_dims(length, width)?;
    if ds_length.is_nan() || ds_length < 0.0 {
        return Err(GeometryError::NegativeLength(ds_length));
    }
    let (hl, hw) = (length / 2.0, width / 2.0);
    let local = [
        Point::new(hl, -hw),
        Point::new(hl + ds_length, -hw),
        Point::new(hl + ds_length, hw),
        Point::new(hl, hw),
    ];
    Ok(ConvexPolygon {
        vertices: local.iter().map(|&p| pose.apply(p)).collect(),
        inert: ds_length <= 1e-9,
    })
}

fn separated_on_axes(a: &[Point], b: &[Point], axes_from: &[Point]) -> bool {
    let n = axes_from.len();
    for i in 0..n {
        let e = axes_from[(i + 1) % n] - axes_from[i];
        if e.norm_sq() == 0.0 {
            continue;
        }
        let axis = e.perp();
        let (a0, a1) = project_points(a, axis);
        let (b0, b1) = project_points(b, axis);
        if a1 < b0 || b1 < a0 {
            return true;
        }
    }
    false
}

/// Closed-set intersection test by separating axes; touching counts.
pub fn overlaps(a: &ConvexPolygon, b: &ConvexPolygon) -> bool {
    if a.inert || b.inert {
        return false;
    }
    !(separated_on_axes(&a.vertices, &b.vertices, &a.vertices)
        || separated_on_axes(&a.vertices, &b.vertices, &b.vertices))
}

/// Closed intersection between a polygon and a line segment.
pub fn overlaps_segment(poly: &ConvexPolygon, p: Point, q: Point) -> bool {
    if poly.inert {
        return false;
    }
    let seg = [p, q];
    if separated_on_axes(&poly.vertices, &seg, &poly.vertices) {
        return false;
    }
    let d = q - p;
    if d.norm_sq() == 0.0 {
        return poly.contains(p);
    }
    let axis = d.perp();
    let (a0, a1) = poly.project(axis);
    let v = p.dot(axis);
    !(a1 < v || v < a0)
}

/// Euclidean distance between polygons, 0 when they overlap.
pub fn min_distance(a: &ConvexPolygon, b: &ConvexPolygon) -> f64 {
    if a.inert || b.inert {
        return f64::INFINITY;
    }
    if overlaps(a, b) {
        return 0.0;
    }
    gjk_distance(a, b)
}

fn closest_on_segment(p: Point, q: Point) -> (Point, f64) {
    let d = q - p;
    let dd = d.norm_sq();
    if dd == 0.0 {
        return (p, 0.0);
    }
    let t = (-p.dot(d) / dd).clamp(0.0, 1.0);
    (p + d * t, t)
}

fn gjk_distance(a: &ConvexPolygon, b: &ConvexPolygon) -> f64 {
    let support = |d: Point| a.support(d) - b.support(-d);
    let mut simplex: Vec<Point> = vec![a.vertices[0] - b.vertices[0]];
    let mut v = simplex[0];
    for _ in 0..64 {
        let vv = v.norm_sq();
        if vv == 0.0 {
            return 0.0;
        }
        let w = support(-v);
        if vv - v.dot(w) <= 1e-13 * vv || simplex.contains(&w) {
            return vv.sqrt();
        }
        simplex.push(w);
        match simplex.len() {
            2 => {
                let (c, t) = closest_on_segment(simplex[0], simplex[1]);
                if t == 0.0 {
                    simplex.remove(1);
                } else if t == 1.0 {
                    simplex.remove(0);
                }
                v = c;
            }
            _ => {
                let (p0, p1, p2) = (simplex[0], simplex[1], simplex[2]);
                let s = (p1 - p0).cross(p2 - p0);
                let inside = s != 0.0
                    && [(p0, p1), (p1, p2), (p2, p0)]
                        .iter()
                        .all(|&(x, y)| ((y - x).cross(-x)) * s >= 0.0);
                if inside {
                    return 0.0;
                }
                let mut best: Option<(f64, Point, [Point; 2], f64)> = None;
                for &(x, y) in &[(p0, p1), (p1, p2), (p2, p0)] {
                    let (c, t) = closest_on_segment(x, y);
                    let d = c.norm_sq();
                    if best.is_none_or(|(bd, ..)| d < bd) {
                        best = Some((d, c, [x, y], t));
                    }
                }
                let (_, c, [x, y], t) = best.expect("triangle has edges");
                simplex = if t == 0.0 {
                    vec![x]
                } else if t == 1.0 {
                    vec![y]
                } else {
                    vec![x, y]
                };
                v = c;
            }
        }
    }
    v.norm()
}

/// Area of the intersection of two convex polygons.
pub fn overlap_area(a: &ConvexPolygon, b: &ConvexPolygon) -> f64 {
    if a.inert || b.inert {
        return 0.0;
    }
    clip(&a.vertices, b).map_or(0.0, |pts| shoelace(&pts).max(0.0))
}

/// Sutherland-Hodgman clip of `subject` against the convex `clipper`.
fn clip(subject: &[Point], clipper: &ConvexPolygon) -> Option<Vec<Point>> {
    let mut out: Vec<Point> = subject.to_vec();
    for (e0, e1) in clipper.edges() {
        if out.is_empty() {
            return None;
        }
        let edge = e1 - e0;
        let side = |p: Point| edge.cross(p - e0);
        let input = std::mem::take(&mut out);
        let n = input.len();
        for i in 0..n {
            let cur = input[i];
            let prev = input[(i + n - 1) % n];
            let (sc, sp) = (side(cur), side(prev));
            if sc >= 0.0 {
                if sp < 0.0 {
                    out.push(intersect(prev, cur, sp, sc));
                }
                out.push(cur);
            } else if sp >= 0.0 {
                out.push(intersect(prev, cur, sp, sc));
            }
        }
    }
    if out.len() < 3 {
        None
    } else {
        Some(out)
    }
}

fn intersect(p: Point, q: Point, sp: f64, sq: f64) -> Point {
    let t = sp / (sp - sq);
    p + (q - p) * t
}
