use serde::{Deserialize, Serialize};

use super::Lane;
use crate::geom::{bezier_quadratic, Point2, Polygon, Polyline};
use crate::network::NodeId;
use crate::settings::Settings;
use crate::Diagnostic;

/// A lane seen from a junction.
#[derive(Debug, Clone, Copy)]
pub struct IncidentLane<'a> {
    pub lane: &'a Lane,
    /// The lane's edge starts at the junction node.
    pub edge_starts_here: bool,
}

impl IncidentLane<'_> {
    pub fn is_incoming(&self) -> bool {
        self.lane.direction_matches_axis != self.edge_starts_here
    }
}

/// Trajectory through an intersection from an incoming to an outgoing lane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interconnection {
    pub id: String,
    pub node: NodeId,
    pub from: String,
    pub to: String,
    pub trajectory: Polyline,
}

fn seg_intersection(a: Point2, b: Point2, c: Point2, d: Point2) -> Option<f64> {
    let r = b - a;
    let s = d - c;
    let den = r.cross(s);
    if den.abs() < 1e-15 {
        return None;
    }
    let t = (c - a).cross(s) / den;
    let u = (c - a).cross(r) / den;
    ((0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u)).then_some(t)
}

/// Abscissae along `line` where it crosses the boundary of `poly`, sorted.
fn crossings(line: &Polyline, poly: &Polygon) -> Vec<f64> {
    let mut out = Vec::new();
    let mut acc = 0.0;
    for (a, b) in line.segments() {
        let len = a.dist(b);
        for (c, d) in poly.boundary_segments() {
            if let Some(t) = seg_intersection(a, b, c, d) {
                out.push(acc + t * len);
            }
        }
        acc += len;
    }
    out.sort_by(f64::total_cmp);
    out
}

/// Where a lane meets the intersection: first boundary crossing of an
/// incoming lane, last crossing of an outgoing one. Without a surface (or a
/// crossing) the lane end nearest the junction is used.
fn attach(il: &IncidentLane<'_>, surface: Option<&Polygon>) -> (Point2, Point2) {
    let g = &il.lane.geometry;
    let s = surface.map(|p| crossings(g, p)).and_then(|c| {
        if il.is_incoming() {
            c.first().copied()
        } else {
            c.last().copied()
        }
    });
    let s = s.unwrap_or(if il.is_incoming() { g.length() } else { 0.0 });
    let p = crate::geom::interpolate(g, s).unwrap_or(if il.is_incoming() { g.last() } else { g.first() });
    (p, g.tangent_at(s))
}

/// Quadratic Bezier control point for a connection. Crossing lane lines give
/// the midpoint of their intersection and the junction center; parallel
/// lines continuing straight give a straight segment; other parallel lines
/// use the entry/exit midpoint in place of the intersection.
fn control_point(entry: Point2, d_in: Point2, exit: Point2, d_out: Point2, jc: Point2, settings: &Settings) -> Point2 {
    let cross = d_in.cross(d_out);
    let mid = entry.midpoint(exit);
    if cross.abs() <= settings.parallel_angle_deg.to_radians().sin() {
        return if d_in.dot(d_out) > 0.0 { mid } else { mid.midpoint(jc) };
    }
    let t = (exit - entry).cross(d_out) / cross;
    (entry + d_in * t).midpoint(jc)
}

/// All connections from incoming to outgoing lanes of different edges.
pub fn generate_interconnections(
    node: &NodeId,
    jc: Point2,
    lanes: &[IncidentLane<'_>],
    surface: Option<&Polygon>,
    settings: &Settings,
) -> (Vec<Interconnection>, Vec<Diagnostic>) {
    let mut out = Vec::new();
    let mut diags = Vec::new();
    let attached: Vec<(Point2, Point2)> = lanes.iter().map(|l| attach(l, surface)).collect();
    for (i, from) in lanes.iter().enumerate().filter(|(_, l)| l.is_incoming()) {
        for (j, to) in lanes.iter().enumerate().filter(|(_, l)| !l.is_incoming()) {
            if from.lane.edge == to.lane.edge {
                continue;
            }
            let (entry, d_in) = attached[i];
            let (exit, d_out) = attached[j];
            let c = control_point(entry, d_in, exit, d_out, jc, settings);
            match bezier_quadratic(entry, c, exit, settings.interconnection_samples) {
                Ok(trajectory) => out.push(Interconnection {
                    id: format!("{node}:{}>{}", from.lane.id, to.lane.id),
                    node: node.clone(),
                    from: from.lane.id.clone(),
                    to: to.lane.id.clone(),
                    trajectory,
                }),
                Err(e) => diags.push(Diagnostic::new(
                    node.as_str(),
                    format!("no trajectory from {} to {}: {e}", from.lane.id, to.lane.id),
                )),
            }
        }
    }
    out.sort_by(|a, b| a.id.cmp(&b.id));
    (out, diags)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::traffic::Side;

    fn lane(id: &str, edge: &str, a: Point2, b: Point2, along: bool) -> Lane {
        Lane {
            id: id.into(),
            edge: edge.into(),
            index: 1,
            side: Side::Right,
            offset: -2.0,
            geometry: Polyline::segment(a, b).unwrap(),
            direction_matches_axis: along,
        }
    }

    fn p(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    #[test]
    fn straight_through_is_straight() {
        let s = Settings::default();
        let a = lane("w/1", "w", p(-20.0, -2.0), p(0.0, -2.0), true);
        let b = lane("e/1", "e", p(0.0, -2.0), p(20.0, -2.0), true);
        let sq = Polygon::rect(p(-5.0, -5.0), p(5.0, 5.0)).unwrap();
        let ls = [IncidentLane { lane: &a, edge_starts_here: false }, IncidentLane { lane: &b, edge_starts_here: true }];
        let (ics, _) = generate_interconnections(&"n".into(), p(0.0, 0.0), &ls, Some(&sq), &s);
        assert_eq!(ics.len(), 1);
        let t = &ics[0].trajectory;
        assert_eq!(t.vertices().len(), 16);
        assert_eq!(t.first(), p(-5.0, -2.0));
        assert_eq!(t.last(), p(5.0, -2.0));
        assert!(t.vertices().iter().all(|v| (v.y + 2.0).abs() < 1e-9));
    }

    #[test]
    fn right_turn_control_point() {
        let s = Settings::default();
        // incoming eastbound at y=-2, outgoing southbound at x=2
        let a = lane("w/1", "w", p(-20.0, -2.0), p(0.0, -2.0), true);
        let b = lane("s/1", "s", p(2.0, 0.0), p(2.0, -20.0), true);
        let sq = Polygon::rect(p(-5.0, -5.0), p(5.0, 5.0)).unwrap();
        let ls = [IncidentLane { lane: &a, edge_starts_here: false }, IncidentLane { lane: &b, edge_starts_here: true }];
        let (ics, _) = generate_interconnections(&"n".into(), p(0.0, 0.0), &ls, Some(&sq), &s);
        let t = &ics[0].trajectory;
        assert_eq!(t.first(), p(-5.0, -2.0));
        assert_eq!(t.last(), p(2.0, -5.0));
        // control = ((2,-2) + (0,0)) / 2 = (1,-1); midpoint sample at t=0.5
        let c = p(1.0, -1.0);
        let expect = p(-5.0, -2.0) * 0.25 + c * 0.5 + p(2.0, -5.0) * 0.25;
        let mid = bezier_quadratic(p(-5.0, -2.0), c, p(2.0, -5.0), 3).unwrap().vertices()[1];
        assert!(mid.dist(expect) < 1e-12);
    }

    #[test]
    fn same_edge_and_direction_filtering() {
        let s = Settings::default();
        let a = lane("w/1", "w", p(-20.0, -2.0), p(0.0, -2.0), true);
        let a2 = lane("w/2", "w", p(0.0, 2.0), p(-20.0, 2.0), false);
        let b = lane("e/1", "e", p(0.0, -2.0), p(20.0, -2.0), true);
        let b2 = lane("e/2", "e", p(20.0, 2.0), p(0.0, 2.0), false);
        let ls = [
            IncidentLane { lane: &a, edge_starts_here: false },
            IncidentLane { lane: &a2, edge_starts_here: false },
            IncidentLane { lane: &b, edge_starts_here: true },
            IncidentLane { lane: &b2, edge_starts_here: true },
        ];
        let (ics, _) = generate_interconnections(&"n".into(), p(0.0, 0.0), &ls, None, &s);
        let pairs: Vec<(&str, &str)> = ics.iter().map(|i| (i.from.as_str(), i.to.as_str())).collect();
        assert_eq!(pairs, vec![("e/2", "w/2"), ("w/1", "e/1")]);
    }
}
