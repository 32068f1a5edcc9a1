use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use streetgen::geom::{buffer, build_area, union_all, Linework, Point2, Polyline, Precision};
use streetgen::junction::solve_junction;
use streetgen::network::build_topology;
use streetgen::{synth, NodeId, Settings};

fn kernel(c: &mut Criterion) {
    let p = Precision::default();
    let zigzag = Polyline::new((0..40).map(|i| Point2::new(i as f64 * 5.0, if i % 2 == 0 { 0.0 } else { 4.0 })).collect()).unwrap();
    c.bench_function("buffer_zigzag_40", |b| b.iter(|| black_box(buffer(&zigzag, 3.0, p).unwrap().area())));

    let squares: Vec<_> = (0..30)
        .map(|i| {
            let o = Point2::new(i as f64 * 7.0, (i % 3) as f64 * 4.0);
            streetgen::geom::Polygon::rect(o, o + Point2::new(10.0, 10.0)).unwrap()
        })
        .collect();
    c.bench_function("union_30_squares", |b| b.iter(|| black_box(union_all(&squares, 1e-6).len())));

    let lines: Vec<Linework> = (0..11)
        .flat_map(|i| {
            let t = i as f64 * 10.0;
            [
                Linework::Line(Polyline::segment(Point2::new(t, 0.0), Point2::new(t, 100.0)).unwrap()),
                Linework::Line(Polyline::segment(Point2::new(0.0, t), Point2::new(100.0, t)).unwrap()),
            ]
        })
        .collect();
    c.bench_function("build_area_10x10", |b| b.iter(|| black_box(build_area(&lines, 1e-6).len())));
}

fn junction(c: &mut Criterion) {
    let s = Settings::default();
    let topo = build_topology(&synth::star(6), s.snap_tol).unwrap();
    let center = topo.nodes.iter().find(|(n, _)| topo.degree(n) == 6).map(|(n, _)| n.clone()).unwrap_or(NodeId::from("n0"));
    c.bench_function("solve_junction_star6", |b| b.iter(|| black_box(solve_junction(&topo, &center, &s).is_ok())));
}

criterion_group!(benches, kernel, junction);
criterion_main!(benches);
