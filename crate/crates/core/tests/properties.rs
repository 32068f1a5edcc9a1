use std::f64::consts::TAU;

use proptest::prelude::*;
use streetgen::engine::kmeans;
use streetgen::geom::{buffer, distance_to_polyline, normalize_angle, offset_curve, Point2, Polyline, Precision};
use streetgen::junction::{corner_center, CornerInput};
use streetgen::objects::{place_object, OrientationMode, Position, StreetObject};
use streetgen::traffic::{lane_offsets, trigram_similarity, Evidence};

fn point() -> impl Strategy<Value = Point2> {
    (-100.0..100.0f64, -100.0..100.0f64).prop_map(|(x, y)| Point2::new(x, y))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn buffer_grows_with_distance(a in point(), b in point(), d in 0.5..5.0f64) {
        prop_assume!(a.dist(b) > 1.0);
        let l = Polyline::segment(a, b).unwrap();
        let p = Precision::default();
        let small = buffer(&l, d, p).unwrap().area();
        let large = buffer(&l, d * 1.5, p).unwrap().area();
        prop_assert!(large > small);
    }

    #[test]
    fn offset_keeps_distance_on_segments(a in point(), b in point(), d in -5.0..5.0f64) {
        prop_assume!(a.dist(b) > 1.0);
        let l = Polyline::segment(a, b).unwrap();
        let o = offset_curve(&l, d, Precision::default()).unwrap();
        for v in o.vertices() {
            prop_assert!((distance_to_polyline(&l, *v) - d.abs()).abs() < 1e-6);
        }
    }

    #[test]
    fn corner_center_is_rigid_motion_equivariant(angle in 0.6..2.5f64, rot in 0.0..6.28f64, t in point(), r in 0.5..5.0f64) {
        let a1 = Polyline::segment(Point2::new(0.0, 0.0), Point2::new(200.0, 0.0)).unwrap();
        let a2 = Polyline::segment(Point2::new(0.0, 0.0), Point2::from_angle(angle) * 200.0).unwrap();
        let base = corner_center(&CornerInput { a1: &a1, w1: 4.0, a2: &a2, w2: 3.0, jc: Point2::default(), sector: None }, r);
        let f = |p: Point2| p.rotate(rot) + t;
        let (b1, b2) = (a1.transformed(f), a2.transformed(f));
        let moved = corner_center(&CornerInput { a1: &b1, w1: 4.0, a2: &b2, w2: 3.0, jc: f(Point2::default()), sector: None }, r);
        match (base.center, moved.center) {
            (Some(c), Some(m)) => prop_assert!(f(c).dist(m) < 1e-6),
            (None, None) => {}
            other => prop_assert!(false, "{other:?}"),
        }
    }

    #[test]
    fn lane_offsets_are_symmetric(w in 0.5..10.0f64, n in 1u32..8) {
        let o = lane_offsets(w, n);
        for k in 0..o.len() {
            prop_assert!((o[k] + o[o.len() - 1 - k]).abs() < 1e-9);
        }
        prop_assert!(o.iter().all(|x| x.abs() < w));
    }

    #[test]
    fn trigram_similarity_bounds(a in "[A-Z ]{0,12}", b in "[A-Z ]{0,12}") {
        let s = trigram_similarity(&a, &b);
        prop_assert!((0.0..=1.0).contains(&s));
        prop_assert_eq!(s, trigram_similarity(&b, &a));
    }

    #[test]
    fn score_is_monotone(g in 0.0..1.0f64, dg in 0.0..0.5f64, n: bool, k: bool) {
        let w = [0.5, 0.3, 0.2];
        let base = Evidence { geometric: g, same_name: n, keyword: k };
        let more = Evidence { geometric: (g + dg).min(1.0), ..base };
        prop_assert!(more.score(w) >= base.score(w));
        let named = Evidence { same_name: true, ..base };
        let tagged = Evidence { keyword: true, ..base };
        prop_assert!(named.score(w) >= base.score(w));
        prop_assert!(tagged.score(w) >= base.score(w));
    }

    #[test]
    fn kmeans_is_deterministic_and_total(pts in prop::collection::vec(point(), 3..40), k in 1usize..4, seed: u64) {
        let a = kmeans(&pts, k, seed, 50).unwrap();
        prop_assert_eq!(&a, &kmeans(&pts, k, seed, 50).unwrap());
        for j in 0..k {
            prop_assert!(a.contains(&j));
        }
    }

    #[test]
    fn placement_is_rigid_motion_equivariant(s in 0.0..10.0f64, off in -3.0..3.0f64, rot in 0.0..6.28f64, t in point()) {
        let axis = Polyline::segment(Point2::new(0.0, 0.0), Point2::new(10.0, 0.0)).unwrap();
        let obj = StreetObject {
            id: "o".into(),
            kind: "tree".into(),
            position: Position::AxisRelative { edge: "e".into(), s, lateral_offset: off },
            orientation: OrientationMode::AxisRelative,
            angle: 0.3,
        };
        let f = |p: Point2| p.rotate(rot) + t;
        let (p0, a0) = place_object(&obj, Some(&axis), None).unwrap();
        let (p1, a1) = place_object(&obj, Some(&axis.transformed(f)), None).unwrap();
        prop_assert!(f(p0).dist(p1) < 1e-6);
        let turn = normalize_angle(a0 + rot - a1);
        prop_assert!(turn.min(TAU - turn) < 1e-6);
    }
}
