use std::f64::consts::PI;

use super::{ArcOrientation, CircleArc, GeomError, Point2, Polyline};

/// Number of chords needed to approximate `sweep` radians of a circle of
/// `radius` with chord error at most `tol`. A full circle never gets fewer
/// than four chords.
pub fn arc_segment_count(radius: f64, sweep: f64, tol: f64) -> usize {
    let per_full = if tol < radius {
        let step = 2.0 * (1.0 - tol / radius).acos();
        ((2.0 * PI) / step).ceil().max(4.0)
    } else {
        4.0
    };
    ((per_full * sweep / (2.0 * PI)).ceil() as usize).max(1)
}

/// Linearize an arc with vertices on the circle; chord sagitta stays under `tol`.
pub fn arc_to_polyline(arc: &CircleArc, tol: f64) -> Result<Polyline, GeomError> {
    if !(tol > 0.0) {
        return Err(GeomError::InvalidParameter(format!("tolerance {tol} must be positive")));
    }
    let sweep = arc.sweep();
    let n = arc_segment_count(arc.radius, sweep, tol);
    let sign = match arc.orientation {
        ArcOrientation::Ccw => 1.0,
        ArcOrientation::Cw => -1.0,
    };
    let mut pts = Vec::with_capacity(n + 1);
    pts.push(arc.start_point());
    for i in 1..n {
        pts.push(arc.point_at_angle(arc.start_angle + sign * sweep * i as f64 / n as f64));
    }
    pts.push(arc.end_point());
    Polyline::new(pts)
}

/// Circle through three points.
pub fn fit_circle_3pts(p1: Point2, p2: Point2, p3: Point2) -> Result<(Point2, f64), GeomError> {
    let a = p2 - p1;
    let b = p3 - p1;
    let d = 2.0 * a.cross(b);
    let scale = a.dot(a).max(b.dot(b));
    if d.abs() <= 1e-12 * scale || scale == 0.0 {
        return Err(GeomError::NoCircle);
    }
    let a2 = a.dot(a);
    let b2 = b.dot(b);
    let ux = (b.y * a2 - a.y * b2) / d;
    let uy = (a.x * b2 - b.x * a2) / d;
    let center = Point2::new(p1.x + ux, p1.y + uy);
    Ok((center, ux.hypot(uy)))
}

/// Sample `n_samples` points of the quadratic Bezier `p0, c, p1` at uniform
/// parameters; the end samples are exactly `p0` and `p1`.
pub fn bezier_quadratic(p0: Point2, c: Point2, p1: Point2, n_samples: usize) -> Result<Polyline, GeomError> {
    if n_samples < 2 {
        return Err(GeomError::InvalidParameter(format!("need at least 2 samples, got {n_samples}")));
    }
    let mut pts = Vec::with_capacity(n_samples);
    pts.push(p0);
    for i in 1..n_samples - 1 {
        let t = i as f64 / (n_samples - 1) as f64;
        let u = 1.0 - t;
        pts.push(p0 * (u * u) + c * (2.0 * t * u) + p1 * (t * t));
    }
    pts.push(p1);
    Polyline::new(pts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    #[test]
    fn unit_circle_fit() {
        let (c, r) = fit_circle_3pts(p(1.0, 0.0), p(0.0, 1.0), p(-1.0, 0.0)).unwrap();
        assert!(c.dist(p(0.0, 0.0)) < 1e-12);
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bisector_fit() {
        let (c, r) = fit_circle_3pts(p(0.0, 0.0), p(2.0, 0.0), p(1.0, 1.0)).unwrap();
        assert!(c.dist(p(1.0, 0.0)) < 1e-12);
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn collinear_has_no_circle() {
        assert_eq!(fit_circle_3pts(p(0.0, 0.0), p(1.0, 0.0), p(2.0, 0.0)), Err(GeomError::NoCircle));
    }

    #[test]
    fn bezier_midpoint_and_ends() {
        let b = bezier_quadratic(p(0.0, 0.0), p(1.0, 1.0), p(2.0, 0.0), 3).unwrap();
        assert_eq!(b.vertices()[1], p(1.0, 0.5));
        assert_eq!(b.first(), p(0.0, 0.0));
        assert_eq!(b.last(), p(2.0, 0.0));
        assert!(bezier_quadratic(p(0.0, 0.0), p(1.0, 1.0), p(2.0, 0.0), 1).is_err());
    }

    #[test]
    fn collinear_bezier_stays_on_line() {
        let b = bezier_quadratic(p(0.0, 0.0), p(3.0, 3.0), p(4.0, 4.0), 17).unwrap();
        for q in b.vertices() {
            assert!((q.x - q.y).abs() < 1e-12);
        }
    }

    #[test]
    fn quarter_circle_chord_error() {
        let arc = CircleArc::new(p(0.0, 0.0), 1.0, 0.0, PI / 2.0, ArcOrientation::Ccw).unwrap();
        let pl = arc_to_polyline(&arc, 0.01).unwrap();
        for (a, b) in pl.segments() {
            let mid = a.midpoint(b);
            assert!(1.0 - mid.norm() <= 0.01 + 1e-12);
        }
        assert_eq!(pl.first(), arc.start_point());
        assert_eq!(pl.last(), arc.end_point());
    }

    #[test]
    fn full_circle_length() {
        let arc = CircleArc::new(p(0.0, 0.0), 5.0, 0.0, 0.0, ArcOrientation::Ccw).unwrap();
        let pl = arc_to_polyline(&arc, 0.01).unwrap();
        let rel = (pl.length() - 10.0 * PI).abs() / (10.0 * PI);
        assert!(rel < 1e-3, "relative error {rel}");
    }

    #[test]
    fn coarse_tolerance_floor() {
        assert_eq!(arc_segment_count(1.0, 2.0 * PI, 5.0), 4);
        let arc = CircleArc::new(p(0.0, 0.0), 1.0, 0.0, 0.0, ArcOrientation::Cw).unwrap();
        assert_eq!(arc_to_polyline(&arc, 2.0).unwrap().vertices().len(), 5);
    }
}
