//! Synthetic road networks for tests, benches and the `bench` command.

use std::f64::consts::TAU;

use crate::geom::{Point2, Polyline};
use crate::network::{Direction, Importance, RoadAxis};

fn p(x: f64, y: f64) -> Point2 {
    Point2::new(x, y)
}

fn axis(id: impl Into<String>, pts: &[Point2], half_width: f64) -> RoadAxis {
    RoadAxis::new(id.into(), Polyline::new(pts.to_vec()).expect("generator emits valid lines"), half_width)
}

/// `nx * ny` crossroads `spacing` meters apart; every block side is its own
/// axis, giving `nx * (ny - 1) + ny * (nx - 1)` edges. Every fifth street
/// is a wider major road with four lanes.
pub fn grid(nx: usize, ny: usize, spacing: f64) -> Vec<RoadAxis> {
    let style = |k: usize, a: RoadAxis| {
        if k % 5 == 0 {
            RoadAxis { half_width: 5.0, ..a }.with_importance(Importance::Major).with_speed(50.0).with_lanes(4, Direction::Both)
        } else {
            a.with_importance(Importance::Residential).with_speed(30.0).with_lanes(2, Direction::Both)
        }
    };
    let mut out = Vec::new();
    for j in 0..ny {
        for i in 0..nx.saturating_sub(1) {
            let (x, y) = (i as f64 * spacing, j as f64 * spacing);
            let a = axis(format!("h{j}_{i}"), &[p(x, y), p(x + spacing, y)], 3.0).with_name(format!("RUE H{j}"));
            out.push(style(j, a));
        }
    }
    for i in 0..nx {
        for j in 0..ny.saturating_sub(1) {
            let (x, y) = (i as f64 * spacing, j as f64 * spacing);
            let a = axis(format!("v{i}_{j}"), &[p(x, y), p(x, y + spacing)], 3.0).with_name(format!("AVENUE V{i}"));
            out.push(style(i, a));
        }
    }
    out
}

/// Plus-shaped crossroads: four 50 m arms with one lane each way.
pub fn four_way() -> Vec<RoadAxis> {
    [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)]
        .iter()
        .enumerate()
        .map(|(k, &(dx, dy))| axis(format!("arm{k}"), &[p(0.0, 0.0), p(50.0 * dx, 50.0 * dy)], 3.5).with_lanes(2, Direction::Both))
        .collect()
}

/// `degree` arms of 60 m radiating from the origin.
pub fn star(degree: usize) -> Vec<RoadAxis> {
    (0..degree)
        .map(|k| {
            let d = Point2::from_angle(TAU * k as f64 / degree as f64);
            axis(format!("s{k}"), &[p(0.0, 0.0), d * 60.0], 3.0)
        })
        .collect()
}

/// Two axes leaving a common node about two degrees apart.
pub fn near_parallel() -> Vec<RoadAxis> {
    vec![axis("np0", &[p(0.0, 0.0), p(100.0, 0.0)], 3.0), axis("np1", &[p(0.0, 0.0), p(100.0, 3.5)], 3.0)]
}

/// A closed square loop with one access road.
pub fn loop_block() -> Vec<RoadAxis> {
    vec![
        axis("loop", &[p(0.0, 0.0), p(60.0, 0.0), p(60.0, 60.0), p(0.0, 60.0), p(0.0, 0.0)], 3.0),
        axis("access", &[p(60.0, 30.0), p(120.0, 30.0)], 3.0),
    ]
}

/// Two parallel cross streets 1 m apart, leaving a 1 m edge between them.
pub fn sliver() -> Vec<RoadAxis> {
    vec![
        axis("main", &[p(-50.0, 0.0), p(51.0, 0.0)], 3.0),
        axis("x0", &[p(0.0, -50.0), p(0.0, 50.0)], 3.0),
        axis("x1", &[p(1.0, -50.0), p(1.0, 50.0)], 3.0),
    ]
}

/// A wide road with a short narrow spur lying inside its buffer.
pub fn contained_pair() -> Vec<RoadAxis> {
    vec![axis("wide", &[p(0.0, 0.0), p(100.0, 0.0)], 6.0), axis("spur", &[p(50.0, 0.0), p(50.0, 3.0)], 1.0)]
}

/// The robustness suite: named degenerate or awkward configurations.
pub fn stress_suite() -> Vec<(&'static str, Vec<RoadAxis>)> {
    vec![
        ("grid", grid(4, 4, 40.0)),
        ("star8", star(8)),
        ("near_parallel", near_parallel()),
        ("loop_block", loop_block()),
        ("sliver", sliver()),
        ("contained_pair", contained_pair()),
    ]
}

/// A 16-gon ring of radius `r` around `center`, drawn as four axes of five
/// vertices, all named `name`, with four straight approach roads.
pub fn roundabout(center: Point2, r: f64, name: &str) -> Vec<RoadAxis> {
    let v = |k: usize| center + Point2::from_angle(TAU * k as f64 / 16.0) * r;
    let mut out: Vec<RoadAxis> = (0..4)
        .map(|q| {
            let pts: Vec<Point2> = (0..=4).map(|i| v((4 * q + i) % 16)).collect();
            axis(format!("ring{q}"), &pts, 4.0).with_name(name)
        })
        .collect();
    let approach = ["RUE DU NORD", "RUE DE L EST", "RUE DU SUD", "RUE DE L OUEST"];
    for (q, road) in approach.iter().enumerate() {
        let k = (4 * q + 2) % 16;
        let a = v(k);
        let d = (a - center).normalized().expect("ring vertex off center");
        out.push(axis(format!("approach{q}"), &[a, a + d * 40.0], 3.5).with_name(*road));
    }
    out
}

/// Square loop of four identically named axes.
pub fn same_name_block(name: &str) -> Vec<RoadAxis> {
    let c = [p(0.0, 0.0), p(80.0, 0.0), p(80.0, 80.0), p(0.0, 80.0)];
    (0..4).map(|k| axis(format!("side{k}"), &[c[k], c[(k + 1) % 4]], 3.0).with_name(name)).collect()
}

/// Three tight groups of short axes, `separation` meters apart.
pub fn three_groups(separation: f64) -> Vec<RoadAxis> {
    let centers = [p(0.0, 0.0), p(separation, 0.0), p(0.0, separation)];
    let mut out = Vec::new();
    for (g, c) in centers.iter().enumerate() {
        for k in 0..5 {
            let a = *c + Point2::from_angle(TAU * k as f64 / 5.0) * 4.0;
            out.push(axis(format!("g{g}_{k}"), &[a, a + p(3.0, 1.0)], 2.0));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::build_topology;

    #[test]
    fn grid_edge_count() {
        let t = build_topology(&grid(10, 10, 50.0), 0.01).unwrap();
        assert_eq!(t.edges.len(), 180);
        assert_eq!(t.nodes.len(), 100);
    }

    #[test]
    fn generators_build() {
        for (name, axes) in stress_suite() {
            let t = build_topology(&axes, 0.01).unwrap();
            assert!(!t.edges.is_empty(), "{name}");
        }
        let t = build_topology(&sliver(), 0.01).unwrap();
        assert!(t.edges.values().any(|e| (e.geometry.length() - 1.0).abs() < 1e-9));
        let r = build_topology(&roundabout(p(0.0, 0.0), 12.0, "PL DE TEST"), 0.01).unwrap();
        assert_eq!(r.faces.values().filter(|f| !f.universal).count(), 1);
    }
}
