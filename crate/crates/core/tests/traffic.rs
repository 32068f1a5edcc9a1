use streetgen::engine::{build, GenerateOptions, StreetModelStore};
use streetgen::geom::{Point2, Polyline};
use streetgen::network::build_topology;
use streetgen::traffic::{detect_roundabouts, generate_lanes, lane_groups, Side};
use streetgen::{synth, Direction, EdgeId, Settings};

#[test]
fn four_way_has_twelve_interconnections() {
    let s = Settings::default();
    let topo = build_topology(&synth::four_way(), s.snap_tol).unwrap();
    let mut st = StreetModelStore::new();
    build(&mut st, &topo, &s, GenerateOptions::default()).unwrap();
    let ics: Vec<_> = st.interconnections().collect();
    assert_eq!(ics.len(), 12);
    let center = st.intersections().next().unwrap();
    for ic in ics {
        let (a, b) = (ic.trajectory.first(), ic.trajectory.last());
        assert!(center.polygon.distance_to_boundary(a) < 1e-6, "{} starts off the boundary", ic.id);
        assert!(center.polygon.distance_to_boundary(b) < 1e-6, "{} ends off the boundary", ic.id);
        assert_eq!(ic.trajectory.vertices().len(), s.interconnection_samples);
    }
}

/// Brute force: enumerate lane centers by walking across the road from the
/// right edge in steps of one lane width.
fn oracle(half_width: f64, n: u32) -> Vec<f64> {
    let lw = 2.0 * half_width / n as f64;
    (0..n).map(|k| -half_width + lw * (k as f64 + 0.5)).collect()
}

#[test]
fn lane_layouts_one_to_six() {
    let s = Settings::default();
    let axis = Polyline::segment(Point2::new(0.0, 0.0), Point2::new(40.0, 0.0)).unwrap();
    let e = EdgeId::from("e");
    for n in 1..=6u32 {
        let l = generate_lanes(&e, &axis, 6.0, n, Direction::Both, &s);
        let mut got: Vec<f64> = l.lanes.iter().map(|x| x.offset).collect();
        got.sort_by(f64::total_cmp);
        let want = oracle(6.0, n);
        assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-12, "n={n}: {got:?} vs {want:?}");
        }
        assert_eq!(l.separators.len(), n as usize - 1);
        // numbering grows away from the axis, right before left
        let mut by_index = l.lanes.clone();
        by_index.sort_by_key(|x| x.index);
        for w in by_index.windows(2) {
            assert!(w[0].offset.abs() <= w[1].offset.abs() + 1e-12);
        }
        for lane in &l.lanes {
            let along = lane.side == Side::Right;
            assert_eq!(lane.direction_matches_axis, along);
            let y = lane.geometry.first().y;
            assert!((y - lane.offset).abs() < 1e-12);
        }
        let groups = lane_groups(&e, &l.lanes);
        assert_eq!(groups.len(), if n == 1 { 1 } else { 2 });
    }
}

#[test]
fn roundabout_detected() {
    let s = Settings::default();
    let c = Point2::new(200.0, 100.0);
    let topo = build_topology(&synth::roundabout(c, 12.0, "PL DE TEST"), s.snap_tol).unwrap();
    let found = detect_roundabouts(&topo, &s);
    let geo: Vec<_> = found.iter().filter(|r| r.evidence.geometric > 0.0).collect();
    assert_eq!(geo.len(), 1);
    let r = geo[0];
    assert!(r.center.dist(c) < 0.5);
    assert!((r.radius - 12.0).abs() < 0.5);
    assert!(r.evidence.same_name && r.evidence.keyword);
    assert!(r.score > 0.8);
}

#[test]
fn same_name_block_is_toponym_only() {
    let s = Settings::default();
    let topo = build_topology(&synth::same_name_block("RUE X"), s.snap_tol).unwrap();
    let found = detect_roundabouts(&topo, &s);
    assert_eq!(found.len(), 1);
    assert_eq!(found[0].evidence.geometric, 0.0);
    assert!(found[0].evidence.same_name && !found[0].evidence.keyword);
}

#[test]
fn manhattan_grid_has_no_geometric_candidates() {
    let s = Settings::default();
    let topo = build_topology(&synth::grid(8, 8, 50.0), s.snap_tol).unwrap();
    assert!(detect_roundabouts(&topo, &s).iter().all(|r| r.evidence.geometric == 0.0));
}
