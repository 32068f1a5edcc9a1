//! Corner arcs and border points at junction nodes.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{closest_point, normalize_angle, CircleArc, Point2, Polyline};
use crate::kinematics::{axis_radius, clamp_radius_to_network, Feasibility, RadiusEstimate};
use crate::network::{EdgeId, JunctionNode, NetworkError, NodeId, Topology};
use crate::settings::Settings;
use crate::Diagnostic;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JunctionError {
    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CornerStatus {
    Ok,
    NoCenter,
    /// The nominal arc was too far from the junction; solved again at the minimal radius.
    MisplacedMinRadius,
}

/// Geometry of one corner: two axes leaving the junction center.
#[derive(Debug, Clone, Copy)]
pub struct CornerInput<'a> {
    pub a1: &'a Polyline,
    pub w1: f64,
    pub a2: &'a Polyline,
    pub w2: f64,
    pub jc: Point2,
    /// Angular sector `(start azimuth, sweep)` holding the corner, counter-clockwise
    /// from `a1` to `a2`. `None` uses the smaller sector between the axes.
    pub sector: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CornerSolution {
    pub center: Option<Point2>,
    pub radius: f64,
    pub arc: Option<CircleArc>,
    /// Tangent points on the `a1` and `a2` road edges.
    pub tangents: Option<[Point2; 2]>,
    pub status: CornerStatus,
}

impl CornerSolution {
    fn none(radius: f64) -> Self {
        CornerSolution { center: None, radius, arc: None, tangents: None, status: CornerStatus::NoCenter }
    }

    pub fn is_solved(&self) -> bool {
        self.status != CornerStatus::NoCenter && self.center.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BorderPoint {
    pub edge: EdgeId,
    /// Curvilinear abscissa from the junction node.
    pub s: f64,
    pub point: Point2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corner {
    pub edges: (EdgeId, EdgeId),
    pub radius: RadiusEstimate,
    pub solution: CornerSolution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JunctionSolution {
    pub node: NodeId,
    pub center: Point2,
    pub corners: Vec<Corner>,
    pub borders: Vec<BorderPoint>,
    /// Set on width-change nodes: the half length of the transition window.
    pub transition: Option<f64>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Degree-2 nodes whose axes continue within this angle of a straight line
/// and change width are treated as width transitions.
pub const TRANSITION_ANGLE_DEG: f64 = 5.0;

enum Prim {
    Line(Point2, Point2),
    Circle(Point2, f64),
}

fn primitives(a: &Polyline, d: f64) -> Vec<Prim> {
    let mut out = Vec::new();
    for (p, q) in a.segments() {
        if let Some(u) = (q - p).normalized() {
            let n = u.perp() * d;
            out.push(Prim::Line(p + n, u));
            out.push(Prim::Line(p - n, u));
        }
    }
    out.extend(a.vertices().iter().map(|&v| Prim::Circle(v, d)));
    out
}

fn line_circle(p: Point2, u: Point2, c: Point2, r: f64, out: &mut Vec<Point2>) {
    let foot = p + u * (c - p).dot(u);
    let h = foot.dist(c);
    if h > r * (1.0 + 1e-12) {
        return;
    }
    let k = (r * r - h * h).max(0.0).sqrt();
    out.push(foot + u * k);
    out.push(foot - u * k);
}

/// Intersection points of two primitives. Coincident primitives intersect
/// along a curve; they contribute the point of that curve nearest `jc`,
/// or `probe` when every point is equally near.
fn intersect(a: &Prim, b: &Prim, jc: Point2, probe: Point2, out: &mut Vec<Point2>) {
    match (a, b) {
        (Prim::Line(p, u), Prim::Line(q, v)) => {
            let den = u.cross(*v);
            if den.abs() < 1e-12 {
                if (*q - *p).cross(*u).abs() < 1e-9 {
                    out.push(*p + *u * (jc - *p).dot(*u));
                }
                return;
            }
            let t = (*q - *p).cross(*v) / den;
            out.push(*p + *u * t);
        }
        (Prim::Line(p, u), Prim::Circle(c, r)) | (Prim::Circle(c, r), Prim::Line(p, u)) => line_circle(*p, *u, *c, *r, out),
        (Prim::Circle(c1, r1), Prim::Circle(c2, r2)) => {
            let d = c1.dist(*c2);
            if d < 1e-12 {
                if (r1 - r2).abs() < 1e-12 {
                    match (jc - *c1).normalized() {
                        Some(dir) => out.push(*c1 + dir * *r1),
                        None => out.push(probe),
                    }
                }
                return;
            }
            if d > r1 + r2 || d < (r1 - r2).abs() {
                return;
            }
            let a = (r1 * r1 - r2 * r2 + d * d) / (2.0 * d);
            let h = (r1 * r1 - a * a).max(0.0).sqrt();
            let e = (*c2 - *c1) * (1.0 / d);
            let m = *c1 + e * a;
            out.push(m + e.perp() * h);
            out.push(m - e.perp() * h);
        }
    }
}

fn default_sector(a1: &Polyline, a2: &Polyline) -> (f64, f64) {
    let z1 = normalize_angle(a1.start_direction().angle());
    let z2 = normalize_angle(a2.start_direction().angle());
    let ccw = normalize_angle(z2 - z1);
    if ccw <= PI {
        (z1, ccw)
    } else {
        (z2, 2.0 * PI - ccw)
    }
}

fn in_sector(dir: f64, sector: (f64, f64)) -> bool {
    let off = normalize_angle(dir - sector.0);
    off > 1e-9 && off < sector.1 - 1e-9
}

fn tangent(axis: &Polyline, w: f64, center: Point2) -> (Point2, f64) {
    let c = closest_point(axis, center);
    let dir = (center - c.point).normalized().unwrap_or(Point2::new(0.0, 0.0));
    (c.point + dir * w, c.abscissa)
}

/// Center of the circle of radius `r` tangent to both road edges: a point
/// on the boundaries of both `buffer(a1, w1 + r)` and `buffer(a2, w2 + r)`,
/// inside the corner sector, nearest the junction center.
pub fn corner_center(input: &CornerInput<'_>, r: f64) -> CornerSolution {
    let sector = input.sector.unwrap_or_else(|| default_sector(input.a1, input.a2));
    if !(sector.1 < PI - 1e-9) || !(r > 0.0) {
        return CornerSolution::none(r);
    }
    let (d1, d2) = (input.w1 + r, input.w2 + r);
    let jc = input.jc;
    let probe = jc + Point2::from_angle(sector.0 + 0.5 * sector.1) * d1;
    let p1 = primitives(input.a1, d1);
    let p2 = primitives(input.a2, d2);
    let mut raw = Vec::new();
    for a in &p1 {
        for b in &p2 {
            intersect(a, b, jc, probe, &mut raw);
        }
    }
    let mut best: Option<(f64, Point2)> = None;
    for c in raw {
        if !c.is_finite() || c.dist(jc) < 1e-9 || !in_sector((c - jc).angle(), sector) {
            continue;
        }
        let e1 = closest_point(input.a1, c);
        let e2 = closest_point(input.a2, c);
        if (e1.distance - d1).abs() > 1e-7 * d1.max(1.0) || (e2.distance - d2).abs() > 1e-7 * d2.max(1.0) {
            continue;
        }
        // tangency on the round end cap at the junction, or a flat corner
        if e1.abscissa <= 1e-9 || e2.abscissa <= 1e-9 {
            continue;
        }
        let (t1, _) = tangent(input.a1, input.w1, c);
        let (t2, _) = tangent(input.a2, input.w2, c);
        if t1.dist(t2) < 1e-6 {
            continue;
        }
        let d = c.dist(jc);
        best = match best {
            Some((bd, bp)) if bd < d - 1e-9 || ((bd - d).abs() <= 1e-9 && bp.lex_cmp(&c).is_le()) => Some((bd, bp)),
            _ => Some((d, c)),
        };
    }
    match best {
        Some((_, c)) => CornerSolution { center: Some(c), radius: r, arc: None, tangents: None, status: CornerStatus::Ok },
        None => CornerSolution::none(r),
    }
}

/// Tangent points on both road edges and the arc joining them.
pub fn corner_arc(mut sol: CornerSolution, input: &CornerInput<'_>) -> Result<CornerSolution, JunctionError> {
    let Some(c) = sol.center else { return Ok(sol) };
    let (t1, _) = tangent(input.a1, input.w1, c);
    let (t2, _) = tangent(input.a2, input.w2, c);
    for t in [t1, t2] {
        if t.dist(c) > sol.radius + 1e-3 {
            return Err(JunctionError::InternalInconsistency(format!(
                "tangent point {:?} is {} from center, radius {}",
                t,
                t.dist(c),
                sol.radius
            )));
        }
    }
    let arc = CircleArc::minor_between(c, t1, t2)
        .map_err(|e| JunctionError::InternalInconsistency(e.to_string()))?;
    sol.arc = Some(CircleArc { radius: sol.radius, ..arc });
    sol.tangents = Some([t1, t2]);
    Ok(sol)
}

/// Re-solve at `min_radius` when the arc lies farther than
/// `factor * (max(w1, w2) + r)` from the junction center.
pub fn detect_misplaced(
    sol: CornerSolution,
    input: &CornerInput<'_>,
    factor: f64,
    min_radius: f64,
) -> Result<CornerSolution, JunctionError> {
    let Some(arc) = sol.arc else { return Ok(sol) };
    let threshold = factor * (input.w1.max(input.w2) + sol.radius);
    if arc.distance_to(input.jc) <= threshold {
        return Ok(sol);
    }
    let again = corner_center(input, min_radius);
    if again.center.is_none() {
        return Ok(again);
    }
    let mut again = corner_arc(again, input)?;
    again.status = CornerStatus::MisplacedMinRadius;
    Ok(again)
}

/// Full corner pipeline at radius `r`.
pub fn solve_corner(
    input: &CornerInput<'_>,
    r: f64,
    factor: f64,
    min_radius: f64,
) -> Result<CornerSolution, JunctionError> {
    let sol = corner_center(input, r);
    let sol = corner_arc(sol, input)?;
    detect_misplaced(sol, input, factor, min_radius)
}

/// One border per incident edge: the farthest projection of the adjacent
/// corner centers; edges without any use the widest neighboring half-width.
pub fn border_points(
    junction: &JunctionNode,
    corners: &[Corner],
    half_width: impl Fn(&EdgeId) -> f64,
) -> Vec<BorderPoint> {
    let mut out = Vec::new();
    for inc in &junction.incident {
        let len = inc.away.length();
        let mut best: Option<f64> = None;
        for c in corners {
            if c.edges.0 != inc.edge && c.edges.1 != inc.edge {
                continue;
            }
            let Some(center) = c.solution.center.filter(|_| c.solution.is_solved()) else { continue };
            let s = closest_point(&inc.away, center).abscissa;
            if s > 1e-9 && best.is_none_or(|b| s > b) {
                best = Some(s);
            }
        }
        let s = match best {
            Some(s) => s,
            None => {
                let fallback = junction
                    .incident
                    .iter()
                    .filter(|o| o.edge != inc.edge)
                    .map(|o| half_width(&o.edge))
                    .fold(f64::NAN, f64::max);
                if fallback.is_nan() {
                    continue;
                }
                fallback
            }
        };
        let s = s.min(len);
        let point = crate::geom::interpolate(&inc.away, s).expect("abscissa clamped to length");
        out.push(BorderPoint { edge: inc.edge.clone(), s, point });
    }
    out
}

/// Solve every corner of a junction node, then its border points.
pub fn solve_junction(topo: &Topology, node: &NodeId, settings: &Settings) -> Result<JunctionSolution, JunctionError> {
    let j = topo.junction(node)?;
    let mut corners = Vec::new();
    let mut diagnostics = Vec::new();
    let n = j.incident.len();
    if n >= 2 {
        for i in 0..n {
            let (e1, e2) = (&j.incident[i], &j.incident[(i + 1) % n]);
            let sweep = normalize_angle(e2.azimuth - e1.azimuth);
            let (ax1, ax2) = (topo.axis_of(&e1.edge)?, topo.axis_of(&e2.edge)?);
            let input = CornerInput {
                a1: &e1.away,
                w1: ax1.half_width,
                a2: &e2.away,
                w2: ax2.half_width,
                jc: j.center,
                sector: Some((e1.azimuth, sweep)),
            };
            let (r1, r2) = (axis_radius(ax1, settings), axis_radius(ax2, settings));
            let nominal = if r1.radius <= r2.radius { r1 } else { r2 };
            let (l1, l2) = (e1.away.length(), e2.away.length());
            let est = clamp_radius_to_network(nominal, settings.radius_min, |r| {
                let sol = corner_center(&input, r);
                match sol.center {
                    None => Feasibility::NoCorner,
                    Some(c) => {
                        let s1 = closest_point(input.a1, c).abscissa;
                        let s2 = closest_point(input.a2, c).abscissa;
                        if s1 < l1 && s2 < l2 {
                            Feasibility::Feasible
                        } else {
                            Feasibility::Infeasible
                        }
                    }
                }
            });
            let solution = solve_corner(&input, est.radius, settings.misplaced_factor, settings.radius_min)?;
            if solution.status == CornerStatus::MisplacedMinRadius {
                diagnostics.push(Diagnostic::new(
                    node.as_str(),
                    format!("corner {}/{} misplaced, solved at minimal radius", e1.edge, e2.edge),
                ));
            }
            corners.push(Corner { edges: (e1.edge.clone(), e2.edge.clone()), radius: est, solution });
        }
    }
    let mut borders = border_points(&j, &corners, |e| topo.axis_of(e).map_or(0.0, |a| a.half_width));
    let mut transition = None;
    if n == 2 {
        let (i0, i1) = (&j.incident[0], &j.incident[1]);
        let (w0, w1) = (topo.axis_of(&i0.edge)?.half_width, topo.axis_of(&i1.edge)?.half_width);
        let bend = (normalize_angle(i1.azimuth - i0.azimuth) - PI).abs();
        if (w0 - w1).abs() > 1e-9 && bend <= TRANSITION_ANGLE_DEG.to_radians() {
            let half = 0.5 * settings.transition_length_factor * (w0 - w1).abs();
            borders = [i0, i1]
                .iter()
                .map(|inc| {
                    let s = half.min(inc.away.length());
                    let point = crate::geom::interpolate(&inc.away, s).expect("abscissa clamped to length");
                    BorderPoint { edge: inc.edge.clone(), s, point }
                })
                .collect();
            transition = Some(half);
        }
    }
    Ok(JunctionSolution { node: node.clone(), center: j.center, corners, borders, transition, diagnostics })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    fn seg(a: Point2, b: Point2) -> Polyline {
        Polyline::segment(a, b).unwrap()
    }

    #[test]
    fn perpendicular_oracle() {
        let (a1, a2) = (seg(p(0.0, 0.0), p(20.0, 0.0)), seg(p(0.0, 0.0), p(0.0, 20.0)));
        let input = CornerInput { a1: &a1, w1: 4.0, a2: &a2, w2: 3.0, jc: p(0.0, 0.0), sector: None };
        let sol = corner_center(&input, 2.0);
        assert_eq!(sol.status, CornerStatus::Ok);
        assert!(sol.center.unwrap().dist(p(5.0, 6.0)) < 1e-9);
        let sol = corner_arc(sol, &input).unwrap();
        let [t1, t2] = sol.tangents.unwrap();
        assert!(t1.dist(p(5.0, 4.0)) < 1e-9);
        assert!(t2.dist(p(3.0, 6.0)) < 1e-9);
        let arc = sol.arc.unwrap();
        assert!((arc.sweep() - PI / 2.0).abs() < 1e-9);
        assert!(arc.start_point().dist(t1) < 1e-9 && arc.end_point().dist(t2) < 1e-9);
    }

    #[test]
    fn swap_symmetry() {
        let (a1, a2) = (seg(p(0.0, 0.0), p(20.0, 3.0)), seg(p(0.0, 0.0), p(-4.0, 20.0)));
        let i1 = CornerInput { a1: &a1, w1: 4.0, a2: &a2, w2: 2.5, jc: p(0.0, 0.0), sector: None };
        let i2 = CornerInput { a1: &a2, w1: 2.5, a2: &a1, w2: 4.0, jc: p(0.0, 0.0), sector: None };
        let c1 = corner_center(&i1, 3.0).center.unwrap();
        let c2 = corner_center(&i2, 3.0).center.unwrap();
        assert!(c1.dist(c2) < 1e-9);
    }

    #[test]
    fn contained_buffer_has_no_center() {
        let (a1, a2) = (seg(p(0.0, 0.0), p(20.0, 0.0)), seg(p(0.0, 0.0), p(5.0, 1.0)));
        let input = CornerInput { a1: &a1, w1: 6.0, a2: &a2, w2: 1.0, jc: p(0.0, 0.0), sector: None };
        assert_eq!(corner_center(&input, 2.0).status, CornerStatus::NoCenter);
    }

    #[test]
    fn flat_angle_has_no_center() {
        let (a1, a2) = (seg(p(0.0, 0.0), p(20.0, 0.0)), seg(p(0.0, 0.0), p(-20.0, 0.0)));
        let input = CornerInput { a1: &a1, w1: 3.0, a2: &a2, w2: 3.0, jc: p(0.0, 0.0), sector: None };
        assert_eq!(corner_center(&input, 2.0).status, CornerStatus::NoCenter);
    }

    #[test]
    fn symmetric_case() {
        let (a1, a2) = (seg(p(0.0, 0.0), p(20.0, 0.0)), seg(p(0.0, 0.0), p(0.0, 20.0)));
        let input = CornerInput { a1: &a1, w1: 3.0, a2: &a2, w2: 3.0, jc: p(0.0, 0.0), sector: None };
        assert!(corner_center(&input, 2.0).center.unwrap().dist(p(5.0, 5.0)) < 1e-9);
    }

    #[test]
    fn misplaced_boundary_is_strict() {
        let (a1, a2) = (seg(p(0.0, 0.0), p(20.0, 0.0)), seg(p(0.0, 0.0), p(0.0, 20.0)));
        let input = CornerInput { a1: &a1, w1: 3.0, a2: &a2, w2: 2.0, jc: p(0.0, 0.0), sector: None };
        let sol = corner_arc(corner_center(&input, 1.0), &input).unwrap();
        // center (3, 4): the arc is exactly 4 = 1.0 * (3 + 1) from the junction
        assert!((sol.arc.unwrap().distance_to(input.jc) - 4.0).abs() < 1e-12);
        let same = detect_misplaced(sol.clone(), &input, 1.0, 0.15).unwrap();
        assert_eq!(same, sol);
        let moved = detect_misplaced(sol, &input, 0.99, 0.15).unwrap();
        assert_eq!(moved.status, CornerStatus::MisplacedMinRadius);
        assert_eq!(moved.radius, 0.15);
    }

    #[test]
    fn sliver_pair_is_misplaced() {
        let a1 = seg(p(0.0, 0.0), p(1000.0, 0.0));
        let a2 = seg(p(0.0, 0.0), Point2::from_angle(0.03) * 1000.0);
        let input = CornerInput { a1: &a1, w1: 3.0, a2: &a2, w2: 3.0, jc: p(0.0, 0.0), sector: None };
        let nominal = corner_arc(corner_center(&input, 3.0), &input).unwrap();
        assert!(nominal.arc.unwrap().distance_to(input.jc) > 10.0 * 6.0);
        let sol = detect_misplaced(nominal, &input, 1.5, 0.15).unwrap();
        assert_eq!(sol.status, CornerStatus::MisplacedMinRadius);
        assert_eq!(sol.radius, 0.15);
    }
}
