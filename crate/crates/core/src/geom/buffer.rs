use std::f64::consts::PI;

use super::boolean::{difference, union_all};
use super::{arc_segment_count, GeomError, Point2, Polygon, Polyline, Precision, VariableWidthPolyline};

/// Points of the circle arc of `center`/`r` from angle `a0` counter-clockwise
/// by `sweep`, excluding the start point and including the end point.
fn arc_points(out: &mut Vec<Point2>, center: Point2, r: f64, a0: f64, sweep: f64, tol: f64) {
    let n = arc_segment_count(r, sweep, tol);
    for i in 1..=n {
        out.push(center + Point2::from_angle(a0 + sweep * i as f64 / n as f64) * r);
    }
}

pub(crate) fn disk(center: Point2, r: f64, tol: f64) -> Result<Polygon, GeomError> {
    let mut pts = vec![center + Point2::new(r, 0.0)];
    arc_points(&mut pts, center, r, 0.0, 2.0 * PI, tol);
    Polygon::from_ring(pts)
}

/// Buffer of a single segment: a rectangle capped by two half disks.
pub fn stadium(a: Point2, b: Point2, d: f64, tol: f64) -> Result<Polygon, GeomError> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(GeomError::InvalidParameter(format!("buffer distance {d} must be positive")));
    }
    let Some(u) = (b - a).normalized() else {
        return disk(a, d, tol);
    };
    let n = u.perp();
    let base = n.angle();
    let mut pts = vec![a - n * d, b - n * d];
    arc_points(&mut pts, b, d, base - PI, PI, tol);
    pts.push(a + n * d);
    arc_points(&mut pts, a, d, base, PI, tol);
    pts.pop();
    Polygon::from_ring(pts)
}

/// Region within distance `d` of `line`, with round caps and joins.
pub fn buffer(line: &Polyline, d: f64, prec: Precision) -> Result<Polygon, GeomError> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(GeomError::InvalidParameter(format!("buffer distance {d} must be positive")));
    }
    let v = line.vertices();
    if v.len() == 2 {
        return stadium(v[0], v[1], d, prec.arc_tolerance);
    }
    let parts = line
        .segments()
        .map(|(a, b)| stadium(a, b, d, prec.arc_tolerance))
        .collect::<Result<Vec<_>, _>>()?;
    let mut merged = union_all(&parts, prec.snap_grid);
    merged.sort_by(|a, b| b.area().total_cmp(&a.area()));
    merged.into_iter().next().ok_or(GeomError::EmptyResult)
}

/// Negative buffer: the part of `poly` at distance at least `d` from its boundary.
pub fn shrink(poly: &Polygon, d: f64, prec: Precision) -> Result<Vec<Polygon>, GeomError> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(GeomError::InvalidParameter(format!("shrink distance {d} must be positive")));
    }
    let band = poly
        .boundary_segments()
        .filter(|(a, b)| a != b)
        .map(|(a, b)| stadium(a, b, d, prec.arc_tolerance))
        .collect::<Result<Vec<_>, _>>()?;
    let band = union_all(&band, prec.snap_grid);
    Ok(difference(std::slice::from_ref(poly), &band, prec.snap_grid))
}

/// Buffer with a radius interpolated linearly between vertices: union of the
/// vertex disks and of one isosceles trapezoid per segment.
pub fn variable_buffer(vline: &VariableWidthPolyline, prec: Precision) -> Result<Polygon, GeomError> {
    let v = vline.vertices();
    let r = vline.radii();
    if r.iter().all(|&x| x == 0.0) {
        return Err(GeomError::DegenerateInput("all radii are zero".into()));
    }
    let tol = prec.arc_tolerance;
    let mut parts = Vec::new();
    for (&c, &ri) in v.iter().zip(r) {
        if ri > 0.0 {
            parts.push(disk(c, ri, tol)?);
        }
    }
    for i in 0..v.len().saturating_sub(1) {
        let (a, b, ra, rb) = (v[i], v[i + 1], r[i], r[i + 1]);
        let Some(u) = (b - a).normalized() else { continue };
        if ra == 0.0 && rb == 0.0 {
            continue;
        }
        let n = u.perp();
        let ring = vec![a - n * ra, b - n * rb, b + n * rb, a + n * ra];
        if let Ok(p) = Polygon::from_ring(ring) {
            parts.push(p);
        }
    }
    if parts.len() == 1 {
        return Ok(parts.pop().expect("one part"));
    }
    let mut merged = union_all(&parts, prec.snap_grid);
    merged.sort_by(|a, b| b.area().total_cmp(&a.area()));
    merged.into_iter().next().ok_or(GeomError::EmptyResult)
}
