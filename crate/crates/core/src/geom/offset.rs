use super::{arc_segment_count, distance_to_polyline, GeomError, Point2, Polyline, Precision};

fn line_intersection(p: Point2, r: Point2, q: Point2, s: Point2) -> Option<(f64, f64)> {
    let den = r.cross(s);
    if den.abs() < 1e-12 * r.norm() * s.norm() {
        return None;
    }
    let qp = q - p;
    Some((qp.cross(s) / den, qp.cross(r) / den))
}

/// Remove local loops created by inner joins on short segments.
fn remove_loops(mut pts: Vec<Point2>) -> Vec<Point2> {
    'outer: loop {
        let n = pts.len();
        for i in 0..n.saturating_sub(1) {
            for j in (i + 2..n - 1).rev() {
                let (a, b, c, d) = (pts[i], pts[i + 1], pts[j], pts[j + 1]);
                if let Some((t, u)) = line_intersection(a, b - a, c, d - c) {
                    if t > 1e-12 && t < 1.0 - 1e-12 && u > 1e-12 && u < 1.0 - 1e-12 {
                        let x = a + (b - a) * t;
                        let mut next = pts[..=i].to_vec();
                        next.push(x);
                        next.extend_from_slice(&pts[j + 1..]);
                        pts = next;
                        continue 'outer;
                    }
                }
            }
        }
        return pts;
    }
}

/// Curve at signed distance `d` from `line` (positive on the left), with
/// round joins on the outer side of turns.
pub fn offset_curve(line: &Polyline, d: f64, prec: Precision) -> Result<Polyline, GeomError> {
    if !d.is_finite() {
        return Err(GeomError::InvalidParameter(format!("offset {d} is not finite")));
    }
    if d == 0.0 {
        return Ok(line.clone());
    }
    let segs: Vec<(Point2, Point2, Point2)> = line
        .segments()
        .filter_map(|(a, b)| (b - a).normalized().map(|u| (a, b, u)))
        .collect();
    let shifted: Vec<(Point2, Point2)> = segs.iter().map(|&(a, b, u)| (a + u.perp() * d, b + u.perp() * d)).collect();
    let mut pts = vec![shifted[0].0];
    for i in 0..segs.len() {
        let (s0, e0) = shifted[i];
        if i + 1 == segs.len() {
            pts.push(e0);
            break;
        }
        let (s1, e1) = shifted[i + 1];
        let (u0, u1) = (segs[i].2, segs[i + 1].2);
        let turn = u0.cross(u1);
        if turn.abs() < 1e-12 && u0.dot(u1) > 0.0 {
            pts.push(e0);
            continue;
        }
        if turn * d > 0.0 {
            // inner side: miter when the offset lines meet within both pieces
            match line_intersection(s0, e0 - s0, s1, e1 - s1) {
                Some((t, u)) if (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u) => pts.push(s0 + (e0 - s0) * t),
                _ => {
                    pts.push(e0);
                    pts.push(s1);
                }
            }
        } else {
            let v = segs[i].1;
            let a0 = (e0 - v).angle();
            let mut sweep = (s1 - v).angle() - a0;
            let r = d.abs();
            if d > 0.0 {
                // left offset on a right turn: clockwise around the vertex
                while sweep > 0.0 {
                    sweep -= 2.0 * std::f64::consts::PI;
                }
            } else {
                while sweep < 0.0 {
                    sweep += 2.0 * std::f64::consts::PI;
                }
            }
            pts.push(e0);
            let n = arc_segment_count(r, sweep.abs(), prec.arc_tolerance);
            for k in 1..n {
                pts.push(v + Point2::from_angle(a0 + sweep * k as f64 / n as f64) * r);
            }
            pts.push(s1);
        }
    }
    pts.dedup();
    let pts = remove_loops(pts);
    let limit = d.abs() - prec.arc_tolerance.max(1e-6);
    let kept: Vec<Point2> = pts.into_iter().filter(|&q| distance_to_polyline(line, q) >= limit).collect();
    let out = Polyline::new(kept).map_err(|_| GeomError::EmptyResult)?;
    if out.length() <= prec.snap_grid {
        return Err(GeomError::EmptyResult);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    #[test]
    fn straight_translation() {
        let l = Polyline::segment(p(0.0, 0.0), p(10.0, 0.0)).unwrap();
        let o = offset_curve(&l, 2.0, Precision::default()).unwrap();
        assert_eq!(o.vertices(), &[p(0.0, 2.0), p(10.0, 2.0)]);
        assert_eq!(offset_curve(&l, 0.0, Precision::default()).unwrap(), l);
    }

    #[test]
    fn right_angle_inner_side() {
        let l = Polyline::new(vec![p(0.0, 0.0), p(10.0, 0.0), p(10.0, 10.0)]).unwrap();
        let o = offset_curve(&l, 2.0, Precision::default()).unwrap();
        for (a, b) in o.segments() {
            for k in 0..=20 {
                let q = a.lerp(b, k as f64 / 20.0);
                assert!((distance_to_polyline(&l, q) - 2.0).abs() <= 1e-3);
            }
        }
    }

    #[test]
    fn right_angle_outer_side_is_round() {
        let l = Polyline::new(vec![p(0.0, 0.0), p(10.0, 0.0), p(10.0, 10.0)]).unwrap();
        let o = offset_curve(&l, -2.0, Precision::default()).unwrap();
        assert_eq!(o.first(), p(0.0, -2.0));
        assert_eq!(o.last(), p(12.0, 10.0));
        for &q in o.vertices() {
            assert!((distance_to_polyline(&l, q) - 2.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn reversed_offset_keeps_direction() {
        let l = Polyline::new(vec![p(0.0, 0.0), p(10.0, 0.0), p(20.0, 5.0)]).unwrap();
        let o = offset_curve(&l, 1.5, Precision::default()).unwrap();
        assert!((o.first() - l.first()).dot(l.start_direction()).abs() < 1e-9);
        assert!(o.last().x > o.first().x);
    }
}
