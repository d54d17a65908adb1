//! 2D primitives: points, canonical lines, segments, simple polygons and
//! mirror reflections.

use alloc::vec::Vec;
use core::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::math;

/// Tolerances in meters (or unitless where noted). Every geometric
/// comparison in the crate goes through this record.
pub mod tol {
    /// Default geometric epsilon.
    pub const GEOMETRIC: f64 = 1e-9;
    /// Two points closer than this cannot define a bisector.
    pub const DEGENERATE: f64 = 1e-6;
    /// |sin| between line normals below this means parallel (unitless).
    pub const PARALLEL_SIN: f64 = 1e-9;
    /// Allowed deviation of a line normal from unit length (unitless).
    pub const UNIT_NORMAL: f64 = 1e-12;
    /// Minimum segment length.
    pub const MIN_SEGMENT: f64 = 1e-9;
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Unit vector at `angle` radians from the +x axis.
    #[inline]
    pub fn from_angle(angle: f64) -> Self {
        Self::new(math::cos(angle), math::sin(angle))
    }

    #[inline]
    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product.
    #[inline]
    pub fn cross(self, other: Point2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    #[inline]
    pub fn norm(self) -> f64 {
        math::hypot(self.x, self.y)
    }

    #[inline]
    pub fn distance(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    #[inline]
    pub fn midpoint(self, other: Point2) -> Point2 {
        Point2::new(0.5 * (self.x + other.x), 0.5 * (self.y + other.y))
    }

    /// Counter-clockwise quarter turn.
    #[inline]
    pub fn perp(self) -> Point2 {
        Point2::new(-self.y, self.x)
    }

    #[inline]
    pub fn rotate(self, angle: f64) -> Point2 {
        let (s, c) = (math::sin(angle), math::cos(angle));
        Point2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn angle(self) -> f64 {
        math::atan2(self.y, self.x)
    }
}

impl Add for Point2 {
    type Output = Point2;
    #[inline]
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    #[inline]
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    #[inline]
    fn mul(self, k: f64) -> Point2 {
        Point2::new(self.x * k, self.y * k)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    #[inline]
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

/// Infinite line `{p : normal · p = offset}` in canonical form.
///
/// The normal is unit length and the offset is non-negative. Lines through
/// the origin keep the normal with `x > 0`, or `y > 0` when `x = 0`, so two
/// constructions of the same geometric line compare equal field-wise.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Line2 {
    normal: Point2,
    offset: f64,
}

impl Line2 {
    /// Builds a canonical line from any non-zero normal and an offset
    /// measured in units of that normal's length.
    pub fn new(normal: Point2, offset: f64) -> Result<Self> {
        let len = normal.norm();
        if !(len > tol::GEOMETRIC) || !offset.is_finite() || !normal.is_finite() {
            return Err(Error::DegenerateInput("line normal must be finite and non-zero"));
        }
        Ok(Self::canonical(normal * (1.0 / len), offset / len))
    }

    fn canonical(mut normal: Point2, mut offset: f64) -> Self {
        if math::abs(offset) <= tol::GEOMETRIC {
            offset = 0.0;
            let flip = normal.x < -tol::GEOMETRIC
                || (math::abs(normal.x) <= tol::GEOMETRIC && normal.y < 0.0);
            if flip {
                normal = -normal;
            }
        } else if offset < 0.0 {
            normal = -normal;
            offset = -offset;
        }
        Line2 { normal, offset }
    }

    pub fn through(point: Point2, normal: Point2) -> Result<Self> {
        Self::new(normal, normal.dot(point))
    }

    pub fn from_points(a: Point2, b: Point2) -> Result<Self> {
        if a.distance(b) <= tol::MIN_SEGMENT {
            return Err(Error::DegenerateInput("line needs two distinct points"));
        }
        Self::through(a, (b - a).perp())
    }

    /// Vertical line `x = c`.
    pub fn vertical(c: f64) -> Self {
        Self::canonical(Point2::new(1.0, 0.0), c)
    }

    /// Horizontal line `y = c`.
    pub fn horizontal(c: f64) -> Self {
        Self::canonical(Point2::new(0.0, 1.0), c)
    }

    #[inline]
    pub fn normal(&self) -> Point2 {
        self.normal
    }

    #[inline]
    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Unit direction along the line, the normal turned a quarter
    /// clockwise.
    #[inline]
    pub fn tangent(&self) -> Point2 {
        -self.normal.perp()
    }

    /// Direction of the line in `[0, π)`.
    pub fn direction_angle(&self) -> f64 {
        math::wrap(self.tangent().angle(), core::f64::consts::PI)
    }

    /// Perpendicular foot vector from `from` to the line.
    pub fn foot_vector(&self, from: Point2) -> Point2 {
        self.normal * (self.offset - self.normal.dot(from))
    }

    pub fn distance_to(&self, p: Point2) -> f64 {
        math::abs(point_side(p, self))
    }

    /// Field-wise comparison.
    pub fn approx_eq(&self, other: &Line2, eps: f64) -> bool {
        math::abs(self.normal.x - other.normal.x) <= eps
            && math::abs(self.normal.y - other.normal.y) <= eps
            && math::abs(self.offset - other.offset) <= eps
    }
}

/// Finite wall segment.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Segment2 {
    pub a: Point2,
    pub b: Point2,
}

impl Segment2 {
    pub fn new(a: Point2, b: Point2) -> Result<Self> {
        if !(a.distance(b) > tol::MIN_SEGMENT) {
            return Err(Error::DegenerateInput("segment endpoints coincide"));
        }
        Ok(Self { a, b })
    }

    pub fn length(&self) -> f64 {
        self.a.distance(self.b)
    }

    pub fn line(&self) -> Line2 {
        Line2::from_points(self.a, self.b).expect("segment invariant guarantees distinct endpoints")
    }

    pub fn midpoint(&self) -> Point2 {
        self.a.midpoint(self.b)
    }

    pub fn distance_to(&self, p: Point2) -> f64 {
        let d = self.b - self.a;
        let t = ((p - self.a).dot(d) / d.dot(d)).clamp(0.0, 1.0);
        p.distance(self.a + d * t)
    }
}

/// Simple counter-clockwise polygon.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Polygon2 {
    vertices: Vec<Point2>,
}

impl Polygon2 {
    pub fn new(vertices: Vec<Point2>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidPolygon("fewer than three vertices"));
        }
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPolygon("non-finite vertex"));
        }
        let poly = Polygon2 { vertices };
        for e in 0..poly.len() {
            let (a, b) = poly.edge_points(e);
            if a.distance(b) <= tol::MIN_SEGMENT {
                return Err(Error::InvalidPolygon("zero-length edge"));
            }
        }
        if !(poly.signed_area() > tol::GEOMETRIC) {
            return Err(Error::InvalidPolygon("signed area must be positive (counter-clockwise)"));
        }
        if !poly.is_simple() {
            return Err(Error::InvalidPolygon("edges self-intersect"));
        }
        Ok(poly)
    }

    /// Axis-aligned rectangle `[0, width] × [0, height]`.
    pub fn rectangle(width: f64, height: f64) -> Result<Self> {
        Self::new(alloc::vec![
            Point2::new(0.0, 0.0),
            Point2::new(width, 0.0),
            Point2::new(width, height),
            Point2::new(0.0, height),
        ])
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

    fn edge_points(&self, i: usize) -> (Point2, Point2) {
        (self.vertices[i], self.vertices[(i + 1) % self.vertices.len()])
    }

    /// Edge `i` runs from vertex `i` to vertex `i + 1`.
    pub fn edge(&self, i: usize) -> Segment2 {
        let (a, b) = self.edge_points(i);
        Segment2 { a, b }
    }

    pub fn edges(&self) -> impl Iterator<Item = Segment2> + '_ {
        (0..self.len()).map(move |i| self.edge(i))
    }

    pub fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        0.5 * (0..n)
            .map(|i| self.vertices[i].cross(self.vertices[(i + 1) % n]))
            .sum::<f64>()
    }

    pub fn is_convex(&self) -> bool {
        let n = self.len();
        (0..n).all(|i| {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let c = self.vertices[(i + 2) % n];
            (b - a).cross(c - b) >= -tol::GEOMETRIC
        })
    }

    fn is_simple(&self) -> bool {
        let n = self.len();
        for i in 0..n {
            for j in (i + 1)..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    continue;
                }
                let (a, b) = self.edge_points(i);
                let (c, d) = self.edge_points(j);
                if segments_touch(a, b, c, d) {
                    return false;
                }
            }
        }
        true
    }

    /// Smallest distance from `p` to any edge.
    pub fn boundary_distance(&self, p: Point2) -> f64 {
        self.edges().map(|e| e.distance_to(p)).fold(f64::INFINITY, f64::min)
    }

    pub fn centroid(&self) -> Point2 {
        let n = self.len();
        let mut c = Point2::ORIGIN;
        for i in 0..n {
            let (a, b) = self.edge_points(i);
            c = c + (a + b) * a.cross(b);
        }
        c * (1.0 / (6.0 * self.signed_area()))
    }
}

fn segments_touch(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    let o1 = (b - a).cross(c - a);
    let o2 = (b - a).cross(d - a);
    let o3 = (d - c).cross(a - c);
    let o4 = (d - c).cross(b - c);
    if ((o1 > 0.0 && o2 < 0.0) || (o1 < 0.0 && o2 > 0.0))
        && ((o3 > 0.0 && o4 < 0.0) || (o3 < 0.0 && o4 > 0.0))
    {
        return true;
    }
    let seg_ab = Segment2 { a, b };
    let seg_cd = Segment2 { a: c, b: d };
    seg_ab.distance_to(c) <= tol::GEOMETRIC
        || seg_ab.distance_to(d) <= tol::GEOMETRIC
        || seg_cd.distance_to(a) <= tol::GEOMETRIC
        || seg_cd.distance_to(b) <= tol::GEOMETRIC
}

/// Rotation followed by translation: `p ↦ R(angle)·p + translation`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RigidTransform {
    pub angle: f64,
    pub translation: Point2,
}

impl RigidTransform {
    pub fn new(angle: f64, translation: Point2) -> Self {
        Self { angle, translation }
    }

    pub fn apply(&self, p: Point2) -> Point2 {
        p.rotate(self.angle) + self.translation
    }

    pub fn apply_vector(&self, v: Point2) -> Point2 {
        v.rotate(self.angle)
    }

    pub fn apply_line(&self, l: &Line2) -> Line2 {
        let n = self.apply_vector(l.normal());
        let p = self.apply(l.normal() * l.offset());
        Line2::through(p, n).expect("rotation preserves unit normals")
    }

    pub fn inverse(&self) -> Self {
        Self {
            angle: -self.angle,
            translation: (-self.translation).rotate(-self.angle),
        }
    }
}

/// Reflection of `p` across `l`.
pub fn mirror_point(p: Point2, l: &Line2) -> Point2 {
    let s = point_side(p, l);
    p - l.normal() * (2.0 * s)
}

/// Wall line whose mirror maps `source` onto `image`: the perpendicular
/// bisector of the two points.
pub fn wall_line_from_source_and_is(source: Point2, image: Point2) -> Result<Line2> {
    let d = image - source;
    if !(d.norm() > tol::DEGENERATE) {
        return Err(Error::DegenerateInput("source and image source coincide"));
    }
    Line2::through(source.midpoint(image), d)
}

/// Unique intersection point, or `None` for (near-)parallel lines.
pub fn line_intersection(l1: &Line2, l2: &Line2) -> Option<Point2> {
    let (n1, n2) = (l1.normal(), l2.normal());
    let det = n1.cross(n2);
    if math::abs(det) < tol::PARALLEL_SIN {
        return None;
    }
    let x = (l1.offset() * n2.y - l2.offset() * n1.y) / det;
    let y = (n1.x * l2.offset() - n2.x * l1.offset()) / det;
    Some(Point2::new(x, y))
}

/// Signed perpendicular distance, positive on the side the canonical
/// normal points to. With `offset ≥ 0` the origin is never on the
/// positive side.
#[inline]
pub fn point_side(p: Point2, l: &Line2) -> f64 {
    l.normal().dot(p) - l.offset()
}

/// Strict interior test; points within the geometric epsilon of the
/// boundary count as outside.
pub fn polygon_contains(poly: &Polygon2, p: Point2) -> bool {
    if poly.boundary_distance(p) <= tol::GEOMETRIC {
        return false;
    }
    winding_number(poly, p) != 0
}

fn winding_number(poly: &Polygon2, p: Point2) -> i32 {
    let v = poly.vertices();
    let n = v.len();
    let mut wn = 0;
    for i in 0..n {
        let a = v[i];
        let b = v[(i + 1) % n];
        let left = (b - a).cross(p - a);
        if a.y <= p.y {
            if b.y > p.y && left > 0.0 {
                wn += 1;
            }
        } else if b.y <= p.y && left < 0.0 {
            wn -= 1;
        }
    }
    wn
}
