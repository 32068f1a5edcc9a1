use super::{GeomError, Point2, Polygon, Polyline};

/// Result of a nearest-point query. `abscissa` is the curvilinear position
/// of `point` along the queried line (or ring).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosestPoint {
    pub point: Point2,
    pub distance: f64,
    pub abscissa: f64,
}

/// Closest point of segment `[a, b]` to `p`, with its parameter in `[0, 1]`.
pub fn closest_point_on_segment(a: Point2, b: Point2, p: Point2) -> (Point2, f64) {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return (a, 0.0);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    if t == 0.0 {
        (a, 0.0)
    } else if t == 1.0 {
        (b, 1.0)
    } else {
        (a + ab * t, t)
    }
}

fn closest_on_chain(vertices: &[Point2], p: Point2) -> ClosestPoint {
    let mut best = ClosestPoint { point: vertices[0], distance: vertices[0].dist(p), abscissa: 0.0 };
    let mut acc = 0.0;
    for w in vertices.windows(2) {
        let len = w[0].dist(w[1]);
        let (q, t) = closest_point_on_segment(w[0], w[1], p);
        let d = q.dist(p);
        // strict comparison keeps the smallest abscissa among ties
        if d < best.distance {
            best = ClosestPoint { point: q, distance: d, abscissa: acc + t * len };
        }
        acc += len;
    }
    best
}

/// Point of `line` nearest to `p`; ties resolve to the smallest abscissa.
pub fn closest_point(line: &Polyline, p: Point2) -> ClosestPoint {
    closest_on_chain(line.vertices(), p)
}

/// Nearest point on the boundary of `poly` (exterior first, then holes).
/// The abscissa is measured along the ring that holds the point.
pub fn closest_point_on_polygon(poly: &Polygon, p: Point2) -> ClosestPoint {
    poly.rings()
        .map(|r| closest_on_chain(r, p))
        .fold(None::<ClosestPoint>, |best, c| match best {
            Some(b) if b.distance <= c.distance => Some(b),
            _ => Some(c),
        })
        .expect("polygon has an exterior ring")
}

pub fn distance_to_polyline(line: &Polyline, p: Point2) -> f64 {
    closest_point(line, p).distance
}

/// Curvilinear abscissa of the point of `line` closest to `p`.
pub fn locate_along(line: &Polyline, p: Point2) -> f64 {
    closest_point(line, p).abscissa
}

/// Point at curvilinear abscissa `s` along `line`.
pub fn interpolate(line: &Polyline, s: f64) -> Result<Point2, GeomError> {
    let len = line.length();
    let slack = 1e-9 * len.max(1.0);
    if !s.is_finite() || s < -slack || s > len + slack {
        return Err(GeomError::InvalidParameter(format!("abscissa {s} outside [0, {len}]")));
    }
    if s <= 0.0 {
        return Ok(line.first());
    }
    if s >= len {
        return Ok(line.last());
    }
    let mut acc = 0.0;
    for (a, b) in line.segments() {
        let l = a.dist(b);
        if s <= acc + l {
            return Ok(a.lerp(b, (s - acc) / l));
        }
        acc += l;
    }
    Ok(line.last())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pl(pts: &[(f64, f64)]) -> Polyline {
        Polyline::new(pts.iter().map(|&(x, y)| Point2::new(x, y)).collect()).unwrap()
    }

    #[test]
    fn orthogonal_projection() {
        let c = closest_point(&pl(&[(0.0, 0.0), (10.0, 0.0)]), Point2::new(4.0, 3.0));
        assert_eq!(c.point, Point2::new(4.0, 0.0));
        assert_eq!(c.distance, 3.0);
    }

    #[test]
    fn point_on_line_is_its_own_projection() {
        let l = pl(&[(0.0, 0.0), (10.0, 0.0), (10.0, 10.0)]);
        let c = closest_point(&l, Point2::new(10.0, 4.0));
        assert_eq!(c.point, Point2::new(10.0, 4.0));
        assert_eq!(c.distance, 0.0);
    }

    #[test]
    fn corner_projection_by_enumeration() {
        let l = pl(&[(0.0, 0.0), (10.0, 0.0), (10.0, 10.0)]);
        let p = Point2::new(12.0, -2.0);
        // enumerate each segment's projection independently
        let cands = [
            closest_point_on_segment(Point2::new(0.0, 0.0), Point2::new(10.0, 0.0), p).0,
            closest_point_on_segment(Point2::new(10.0, 0.0), Point2::new(10.0, 10.0), p).0,
        ];
        let best = cands.iter().map(|q| q.dist(p)).fold(f64::INFINITY, f64::min);
        let c = closest_point(&l, p);
        assert_eq!(c.point, Point2::new(10.0, 0.0));
        assert!((c.distance - best).abs() < 1e-12);
        assert!((c.distance - 2.0 * 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn ties_pick_smallest_abscissa() {
        // equidistant from both arms of a U
        let l = pl(&[(0.0, 0.0), (0.0, 10.0), (10.0, 10.0), (10.0, 0.0)]);
        let c = closest_point(&l, Point2::new(5.0, 2.0));
        assert_eq!(c.point, Point2::new(0.0, 2.0));
        assert!(c.abscissa < 10.0);
    }

    #[test]
    fn interpolate_cases() {
        let l = pl(&[(0.0, 0.0), (10.0, 0.0)]);
        assert_eq!(interpolate(&l, 4.0).unwrap(), Point2::new(4.0, 0.0));
        assert_eq!(interpolate(&l, 0.0).unwrap(), Point2::new(0.0, 0.0));
        assert_eq!(interpolate(&l, 10.0).unwrap(), Point2::new(10.0, 0.0));
        let lshape = pl(&[(0.0, 0.0), (10.0, 0.0), (10.0, 10.0)]);
        assert_eq!(interpolate(&lshape, 13.0).unwrap(), Point2::new(10.0, 3.0));
        assert!(matches!(interpolate(&l, 10.5), Err(GeomError::InvalidParameter(_))));
        assert!(matches!(interpolate(&l, -0.5), Err(GeomError::InvalidParameter(_))));
    }

    #[test]
    fn polygon_boundary_projection() {
        let sq = super::super::square(Point2::new(0.0, 0.0), 10.0);
        let c = closest_point_on_polygon(&sq, Point2::new(5.0, 4.0));
        assert_eq!(c.point, Point2::new(5.0, 0.0));
        assert_eq!(c.distance, 4.0);
    }
}
