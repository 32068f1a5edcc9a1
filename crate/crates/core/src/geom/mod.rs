//! Planar geometry primitives shared by every stage of the street pipeline.
//!
//! Coordinates are planar meters. Polygons follow the usual convention of a
//! counter-clockwise exterior ring and clockwise holes, every ring closed.

mod arrangement;
mod boolean;
mod buffer;
mod curves;
mod index;
mod measure;
mod offset;

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use arrangement::{build_area, node_segments, trace_faces, FaceCycle, Linework, NodedLines};
pub use boolean::{boolean, difference, intersection, total_area, union, union_all, BoolOp};
pub use buffer::{buffer, shrink, stadium, variable_buffer};
pub use curves::{arc_segment_count, arc_to_polyline, bezier_quadratic, fit_circle_3pts};
pub use index::GridIndex;
pub use measure::{
    closest_point, closest_point_on_polygon, closest_point_on_segment, distance_to_polyline,
    interpolate, locate_along, ClosestPoint,
};
pub use offset::offset_curve;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("operation produced an empty result")]
    EmptyResult,
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("points are collinear, no circle passes through them")]
    NoCircle,
}

/// Numeric knobs of the kernel: arc linearization and snap-rounding grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Precision {
    /// Maximal chord deviation when an arc is replaced by segments.
    pub arc_tolerance: f64,
    /// Grid on which boolean and noding inputs are snapped.
    pub snap_grid: f64,
}

impl Default for Precision {
    fn default() -> Self {
        Precision { arc_tolerance: 0.01, snap_grid: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn from_angle(angle: f64) -> Self {
        Point2::new(angle.cos(), angle.sin())
    }

    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z component of the 3D cross product.
    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point2) -> f64 {
        (self - o).norm()
    }

    pub fn normalized(self) -> Option<Point2> {
        let n = self.norm();
        if n > 0.0 && n.is_finite() {
            Some(Point2::new(self.x / n, self.y / n))
        } else {
            None
        }
    }

    /// Counter-clockwise quarter turn: the left normal of a direction.
    pub fn perp(self) -> Point2 {
        Point2::new(-self.y, self.x)
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn rotate(self, angle: f64) -> Point2 {
        let (s, c) = angle.sin_cos();
        Point2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn lerp(self, o: Point2, t: f64) -> Point2 {
        Point2::new(self.x + (o.x - self.x) * t, self.y + (o.y - self.y) * t)
    }

    pub fn midpoint(self, o: Point2) -> Point2 {
        Point2::new(0.5 * (self.x + o.x), 0.5 * (self.y + o.y))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Lexicographic order on (x, y), used as deterministic tie-break.
    pub fn lex_cmp(&self, o: &Point2) -> std::cmp::Ordering {
        self.x.total_cmp(&o.x).then(self.y.total_cmp(&o.y))
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, k: f64) -> Point2 {
        Point2::new(self.x * k, self.y * k)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

/// Normalize an angle to `[0, 2π)`.
pub fn normalize_angle(a: f64) -> f64 {
    let r = a.rem_euclid(2.0 * PI);
    if r >= 2.0 * PI {
        0.0
    } else {
        r
    }
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub min: Point2,
    pub max: Point2,
}

impl BBox {
    pub fn of(points: impl IntoIterator<Item = Point2>) -> Option<BBox> {
        let mut it = points.into_iter();
        let first = it.next()?;
        let mut b = BBox { min: first, max: first };
        for p in it {
            b.min.x = b.min.x.min(p.x);
            b.min.y = b.min.y.min(p.y);
            b.max.x = b.max.x.max(p.x);
            b.max.y = b.max.y.max(p.y);
        }
        Some(b)
    }

    pub fn intersects(&self, o: &BBox) -> bool {
        self.min.x <= o.max.x && o.min.x <= self.max.x && self.min.y <= o.max.y && o.min.y <= self.max.y
    }

    pub fn expanded(&self, d: f64) -> BBox {
        BBox {
            min: Point2::new(self.min.x - d, self.min.y - d),
            max: Point2::new(self.max.x + d, self.max.y + d),
        }
    }

    pub fn center(&self) -> Point2 {
        self.min.midpoint(self.max)
    }
}

/// An open polyline of at least two distinct vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Point2>", into = "Vec<Point2>")]
pub struct Polyline {
    vertices: Vec<Point2>,
}

impl TryFrom<Vec<Point2>> for Polyline {
    type Error = GeomError;
    fn try_from(v: Vec<Point2>) -> Result<Self, GeomError> {
        Polyline::new(v)
    }
}

impl From<Polyline> for Vec<Point2> {
    fn from(p: Polyline) -> Vec<Point2> {
        p.vertices
    }
}

impl Polyline {
    /// Builds a polyline, dropping consecutive duplicate vertices.
    pub fn new(mut vertices: Vec<Point2>) -> Result<Self, GeomError> {
        if vertices.iter().any(|p| !p.is_finite()) {
            return Err(GeomError::InvalidGeometry("non-finite coordinate".into()));
        }
        vertices.dedup();
        if vertices.len() < 2 {
            return Err(GeomError::DegenerateInput("polyline needs two distinct vertices".into()));
        }
        Ok(Polyline { vertices })
    }

    pub fn segment(a: Point2, b: Point2) -> Result<Self, GeomError> {
        Polyline::new(vec![a, b])
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn into_vertices(self) -> Vec<Point2> {
        self.vertices
    }

    pub fn first(&self) -> Point2 {
        self.vertices[0]
    }

    pub fn last(&self) -> Point2 {
        self.vertices[self.vertices.len() - 1]
    }

    pub fn segments(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        self.vertices.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn length(&self) -> f64 {
        self.segments().map(|(a, b)| a.dist(b)).sum()
    }

    pub fn reversed(&self) -> Polyline {
        let mut v = self.vertices.clone();
        v.reverse();
        Polyline { vertices: v }
    }

    pub fn bbox(&self) -> BBox {
        BBox::of(self.vertices.iter().copied()).expect("polyline has vertices")
    }

    pub fn is_closed(&self) -> bool {
        self.first() == self.last()
    }

    /// Unit tangent at abscissa `s` (direction of the segment containing `s`).
    pub fn tangent_at(&self, s: f64) -> Point2 {
        let mut acc = 0.0;
        let n = self.vertices.len() - 1;
        for (i, (a, b)) in self.segments().enumerate() {
            let len = a.dist(b);
            if s <= acc + len || i == n - 1 {
                return (b - a).normalized().unwrap_or(Point2::new(1.0, 0.0));
            }
            acc += len;
        }
        unreachable!("polyline has at least one segment")
    }

    /// Direction leaving the first vertex.
    pub fn start_direction(&self) -> Point2 {
        (self.vertices[1] - self.vertices[0]).normalized().unwrap_or(Point2::new(1.0, 0.0))
    }

    /// Sub-polyline between abscissae `s0 <= s1`.
    pub fn slice(&self, s0: f64, s1: f64) -> Result<Polyline, GeomError> {
        let len = self.length();
        let s0 = s0.clamp(0.0, len);
        let s1 = s1.clamp(0.0, len);
        if s1 <= s0 {
            return Err(GeomError::DegenerateInput("empty slice".into()));
        }
        let mut out = vec![interpolate(self, s0)?];
        let mut acc = 0.0;
        for w in self.vertices.windows(2) {
            acc += w[0].dist(w[1]);
            if acc > s0 && acc < s1 {
                out.push(w[1]);
            }
        }
        out.push(interpolate(self, s1)?);
        Polyline::new(out)
    }

    pub fn transformed(&self, f: impl Fn(Point2) -> Point2) -> Polyline {
        Polyline { vertices: self.vertices.iter().map(|&p| f(p)).collect() }
    }
}

/// Signed shoelace area of a ring (closing vertex optional).
pub fn ring_signed_area(ring: &[Point2]) -> f64 {
    if ring.len() < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for i in 0..ring.len() {
        let a = ring[i];
        let b = ring[(i + 1) % ring.len()];
        s += a.cross(b);
    }
    0.5 * s
}

fn close_ring(mut ring: Vec<Point2>) -> Vec<Point2> {
    ring.dedup();
    while ring.len() > 1 && ring.first() == ring.last() {
        ring.pop();
    }
    if let Some(&f) = ring.first() {
        ring.push(f);
    }
    ring
}

pub(crate) fn ring_contains(ring: &[Point2], p: Point2) -> bool {
    let mut inside = false;
    let n = ring.len();
    if n < 3 {
        return false;
    }
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (ring[i], ring[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// A polygon with holes. Rings are closed, exterior counter-clockwise and
/// holes clockwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    exterior: Vec<Point2>,
    holes: Vec<Vec<Point2>>,
}

impl Polygon {
    /// Builds a polygon, closing and re-orienting rings as needed.
    pub fn new(exterior: Vec<Point2>, holes: Vec<Vec<Point2>>) -> Result<Self, GeomError> {
        let mut exterior = close_ring(exterior);
        if exterior.len() < 4 {
            return Err(GeomError::InvalidGeometry("exterior ring needs three distinct vertices".into()));
        }
        if exterior.iter().any(|p| !p.is_finite()) {
            return Err(GeomError::InvalidGeometry("non-finite coordinate".into()));
        }
        if ring_signed_area(&exterior) < 0.0 {
            exterior.reverse();
        }
        let mut hs = Vec::with_capacity(holes.len());
        for h in holes {
            let mut h = close_ring(h);
            if h.len() < 4 {
                continue;
            }
            if ring_signed_area(&h) > 0.0 {
                h.reverse();
            }
            hs.push(h);
        }
        let poly = Polygon { exterior, holes: hs };
        if poly.area() <= 0.0 {
            return Err(GeomError::InvalidGeometry("polygon has no area".into()));
        }
        Ok(poly)
    }

    pub fn from_ring(ring: Vec<Point2>) -> Result<Self, GeomError> {
        Polygon::new(ring, Vec::new())
    }

    /// Axis-aligned rectangle.
    pub fn rect(min: Point2, max: Point2) -> Result<Self, GeomError> {
        Polygon::from_ring(vec![
            min,
            Point2::new(max.x, min.y),
            max,
            Point2::new(min.x, max.y),
        ])
    }

    pub fn exterior(&self) -> &[Point2] {
        &self.exterior
    }

    pub fn holes(&self) -> &[Vec<Point2>] {
        &self.holes
    }

    pub fn rings(&self) -> impl Iterator<Item = &[Point2]> {
        std::iter::once(self.exterior.as_slice()).chain(self.holes.iter().map(|h| h.as_slice()))
    }

    pub fn area(&self) -> f64 {
        ring_signed_area(&self.exterior).abs() - self.holes.iter().map(|h| ring_signed_area(h).abs()).sum::<f64>()
    }

    pub fn bbox(&self) -> BBox {
        BBox::of(self.exterior.iter().copied()).expect("non-empty ring")
    }

    /// Even-odd containment over all rings; boundary points are unspecified.
    pub fn contains(&self, p: Point2) -> bool {
        self.rings().filter(|r| ring_contains(r, p)).count() % 2 == 1
    }

    pub fn boundary_segments(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        self.rings().flat_map(|r| r.windows(2).map(|w| (w[0], w[1])))
    }

    /// Area centroid of the polygon.
    pub fn centroid(&self) -> Point2 {
        let mut cx = 0.0;
        let mut cy = 0.0;
        let mut a = 0.0;
        for r in self.rings() {
            for w in r.windows(2) {
                let c = w[0].cross(w[1]);
                a += c;
                cx += (w[0].x + w[1].x) * c;
                cy += (w[0].y + w[1].y) * c;
            }
        }
        if a.abs() < 1e-300 {
            return self.exterior[0];
        }
        Point2::new(cx / (3.0 * a), cy / (3.0 * a))
    }

    /// A point strictly inside the polygon, found on a horizontal scanline
    /// through the middle of the widest interior interval.
    pub fn interior_point(&self) -> Point2 {
        let c = self.centroid();
        if self.contains(c) && self.distance_to_boundary(c) > 1e-9 {
            return c;
        }
        let bb = self.bbox();
        let mut ys: Vec<f64> = self.rings().flat_map(|r| r.iter().map(|p| p.y)).collect();
        ys.sort_by(|a, b| a.total_cmp(b));
        ys.dedup();
        let mut best = (f64::NEG_INFINITY, c);
        let mut try_line = |y: f64| {
            let mut xs = Vec::new();
            for (a, b) in self.boundary_segments() {
                if (a.y > y) != (b.y > y) {
                    xs.push(a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y));
                }
            }
            xs.sort_by(|a, b| a.total_cmp(b));
            for pair in xs.chunks(2) {
                if let [x0, x1] = pair {
                    if x1 - x0 > best.0 {
                        best = (x1 - x0, Point2::new(0.5 * (x0 + x1), y));
                    }
                }
            }
        };
        for w in ys.windows(2) {
            try_line(0.5 * (w[0] + w[1]));
        }
        try_line(bb.center().y);
        best.1
    }

    pub fn distance_to_boundary(&self, p: Point2) -> f64 {
        self.boundary_segments()
            .map(|(a, b)| closest_point_on_segment(a, b, p).0.dist(p))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn transformed(&self, f: impl Fn(Point2) -> Point2) -> Polygon {
        let map = |r: &Vec<Point2>| r.iter().map(|&p| f(p)).collect::<Vec<_>>();
        let mut exterior = map(&self.exterior);
        if ring_signed_area(&exterior) < 0.0 {
            exterior.reverse();
        }
        let holes = self
            .holes
            .iter()
            .map(|h| {
                let mut h = map(h);
                if ring_signed_area(&h) > 0.0 {
                    h.reverse();
                }
                h
            })
            .collect();
        Polygon { exterior, holes }
    }

    pub fn vertex_count(&self) -> usize {
        self.rings().map(|r| r.len()).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ArcOrientation {
    Cw,
    Ccw,
}

/// A circle arc from `start_angle` to `end_angle` in the given orientation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircleArc {
    pub center: Point2,
    pub radius: f64,
    pub start_angle: f64,
    pub end_angle: f64,
    pub orientation: ArcOrientation,
}

impl CircleArc {
    pub fn new(
        center: Point2,
        radius: f64,
        start_angle: f64,
        end_angle: f64,
        orientation: ArcOrientation,
    ) -> Result<Self, GeomError> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(GeomError::InvalidParameter(format!("arc radius {radius} must be positive")));
        }
        Ok(CircleArc { center, radius, start_angle, end_angle, orientation })
    }

    /// The minor arc around `center` from `a` to `b` (both taken at their
    /// own distance; the radius is the distance of `a`).
    pub fn minor_between(center: Point2, a: Point2, b: Point2) -> Result<Self, GeomError> {
        let sa = (a - center).angle();
        let sb = (b - center).angle();
        let ccw = normalize_angle(sb - sa);
        let orientation = if ccw <= PI { ArcOrientation::Ccw } else { ArcOrientation::Cw };
        CircleArc::new(center, center.dist(a), sa, sb, orientation)
    }

    /// Swept angle in `(0, 2π]`.
    pub fn sweep(&self) -> f64 {
        let raw = match self.orientation {
            ArcOrientation::Ccw => normalize_angle(self.end_angle - self.start_angle),
            ArcOrientation::Cw => normalize_angle(self.start_angle - self.end_angle),
        };
        if raw == 0.0 {
            2.0 * PI
        } else {
            raw
        }
    }

    pub fn point_at_angle(&self, a: f64) -> Point2 {
        self.center + Point2::from_angle(a) * self.radius
    }

    pub fn start_point(&self) -> Point2 {
        self.point_at_angle(self.start_angle)
    }

    pub fn end_point(&self) -> Point2 {
        self.point_at_angle(self.end_angle)
    }

    /// Whether direction angle `a` (seen from the center) lies within the sweep.
    pub fn contains_angle(&self, a: f64) -> bool {
        let off = match self.orientation {
            ArcOrientation::Ccw => normalize_angle(a - self.start_angle),
            ArcOrientation::Cw => normalize_angle(self.start_angle - a),
        };
        off <= self.sweep() + 1e-12
    }

    /// Exact distance from `p` to the arc.
    pub fn distance_to(&self, p: Point2) -> f64 {
        let d = p - self.center;
        if d.norm() > 0.0 && self.contains_angle(d.angle()) {
            (d.norm() - self.radius).abs()
        } else {
            p.dist(self.start_point()).min(p.dist(self.end_point()))
        }
    }
}

/// A polyline whose buffer radius is given at each vertex and varies
/// linearly in between.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableWidthPolyline {
    vertices: Vec<Point2>,
    radii: Vec<f64>,
}

impl VariableWidthPolyline {
    pub fn new(vertices: Vec<Point2>, radii: Vec<f64>) -> Result<Self, GeomError> {
        if vertices.is_empty() {
            return Err(GeomError::DegenerateInput("no vertices".into()));
        }
        if vertices.len() != radii.len() {
            return Err(GeomError::InvalidParameter(format!(
                "{} vertices but {} radii",
                vertices.len(),
                radii.len()
            )));
        }
        if radii.iter().any(|r| !(*r >= 0.0) || !r.is_finite()) {
            return Err(GeomError::InvalidParameter("radii must be finite and non-negative".into()));
        }
        if vertices.iter().any(|p| !p.is_finite()) {
            return Err(GeomError::InvalidGeometry("non-finite coordinate".into()));
        }
        Ok(VariableWidthPolyline { vertices, radii })
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }
}

/// Axis-aligned square ring helper used by tests and synthetic inputs.
pub fn square(min: Point2, side: f64) -> Polygon {
    Polygon::rect(min, Point2::new(min.x + side, min.y + side)).expect("positive side")
}
