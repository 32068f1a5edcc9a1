use std::fs;
use std::path::Path;

use geojson::GeoJson;
use streetgen::engine::StreetModelStore;
use streetgen::geom::{Point2, Polyline};
use streetgen::{synth, RoadAxis};
use streetgen_cli::cli::{EXIT_DIAGNOSTICS, EXIT_FATAL, EXIT_OK};
use streetgen_cli::io::write_network;

struct Run {
    code: i32,
    out: String,
    err: String,
}

fn run(args: &[&str]) -> Run {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let mut full = vec!["streetgen"];
    full.extend_from_slice(args);
    let code = streetgen_cli::run(full, &mut out, &mut err);
    Run { code, out: String::from_utf8(out).unwrap(), err: String::from_utf8(err).unwrap() }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn features(path: &Path) -> Vec<geojson::Feature> {
    match fs::read_to_string(path).unwrap().parse::<GeoJson>().unwrap() {
        GeoJson::FeatureCollection(fc) => fc.features,
        other => panic!("not a collection: {other:?}"),
    }
}

#[test]
fn build_writes_every_layer() {
    let dir = tempfile::tempdir().unwrap();
    let net = dir.path().join("net.geojson");
    write_network(&synth::grid(5, 5, 50.0), &net).unwrap();
    let state = dir.path().join("state.json");
    let out = dir.path().join("out");
    let r = run(&["--state", s(&state), "build", s(&net), "--out", s(&out)]);
    assert_eq!(r.code, EXIT_OK, "{}", r.err);
    assert!(r.out.contains("40 sections"), "{}", r.out);
    for layer in ["sections", "intersections", "blocks", "lanes", "interconnections", "objects", "roundabouts"] {
        assert!(out.join(format!("{layer}.geojson")).exists(), "{layer}");
    }
    assert_eq!(features(&out.join("sections.geojson")).len(), 40);
    let sec = &features(&out.join("sections.geojson"))[0];
    assert!(sec.property("edge").is_some());
    assert!(out.join("traffic.xml").exists());
    assert!(state.exists());
}

#[test]
fn degenerate_axis_gives_partial_build() {
    let dir = tempfile::tempdir().unwrap();
    let mut axes = synth::grid(3, 3, 50.0);
    axes.push(RoadAxis::new("stub", Polyline::segment(Point2::new(10.0, 10.0), Point2::new(10.0, 10.01)).unwrap(), 3.0));
    let net = dir.path().join("net.geojson");
    write_network(&axes, &net).unwrap();
    let state = dir.path().join("state.json");
    let r = run(&["--state", s(&state), "build", s(&net)]);
    assert_eq!(r.code, EXIT_DIAGNOSTICS);
    assert!(r.err.lines().any(|l| l.starts_with("diagnostic: stub:")), "{}", r.err);
    let store = StreetModelStore::load(&state).unwrap();
    assert_eq!(store.sections().count(), 12);
}

#[test]
fn polygon_features_are_skipped() {
    let dir = tempfile::tempdir().unwrap();
    let net = dir.path().join("net.geojson");
    fs::write(
        &net,
        r#"{"type":"FeatureCollection","features":[
            {"type":"Feature","id":"a","geometry":{"type":"LineString","coordinates":[[0,0],[60,0]]},"properties":{"width":6,"lanes":2}},
            {"type":"Feature","id":"lake","geometry":{"type":"Polygon","coordinates":[[[0,10],[5,10],[5,15],[0,10]]]},"properties":{}}
        ]}"#,
    )
    .unwrap();
    let r = run(&["--state", s(&dir.path().join("st.json")), "build", s(&net)]);
    assert_eq!(r.code, EXIT_DIAGNOSTICS);
    assert!(r.err.contains("diagnostic: lake: Polygon"), "{}", r.err);
    assert!(r.err.contains("warning: a: defaults used for importance, speed, direction"), "{}", r.err);
    assert!(r.out.contains("1 sections"));
}

#[test]
fn update_matches_fresh_build() {
    let dir = tempfile::tempdir().unwrap();
    let mut axes = synth::grid(4, 4, 50.0);
    let net = dir.path().join("net.geojson");
    write_network(&axes, &net).unwrap();
    let state = dir.path().join("state.json");
    assert_eq!(run(&["--state", s(&state), "build", s(&net)]).code, EXIT_OK);
    axes.iter_mut().find(|a| a.id.as_str() == "h1_1").unwrap().half_width = 4.5;
    axes.retain(|a| a.id.as_str() != "v3_2");
    write_network(&axes, &net).unwrap();
    let r = run(&["--state", s(&state), "update", s(&net)]);
    assert_eq!(r.code, EXIT_OK, "{}", r.err);
    assert!(r.out.contains("deleted"));
    let fresh = dir.path().join("fresh.json");
    assert_eq!(run(&["--state", s(&fresh), "build", s(&net)]).code, EXIT_OK);
    let (a, b) = (StreetModelStore::load(&state).unwrap(), StreetModelStore::load(&fresh).unwrap());
    assert_eq!(a.sections().count(), b.sections().count());
    for sec in b.sections() {
        let other = a.section(&sec.edge).unwrap();
        assert!((other.polygon.area() - sec.polygon.area()).abs() < 1e-6, "{}", sec.edge);
    }
    // nothing left to do the second time
    let again = run(&["--state", s(&state), "update", s(&net)]);
    assert!(again.out.contains("(0 inserted, 0 updated, 0 deleted)"), "{}", again.out);
}

#[test]
fn scoped_build_touches_only_scope() {
    let dir = tempfile::tempdir().unwrap();
    let net = dir.path().join("net.geojson");
    write_network(&synth::grid(4, 4, 50.0), &net).unwrap();
    let state = dir.path().join("state.json");
    let r = run(&["--state", s(&state), "build", s(&net), "--scope", "h0_0"]);
    assert_eq!(r.code, EXIT_OK, "{}", r.err);
    let store = StreetModelStore::load(&state).unwrap();
    assert!(store.sections().count() < 24 && store.sections().any(|x| x.edge.as_str().starts_with("h0_0")));
    assert_eq!(run(&["--state", s(&state), "build", s(&net), "--scope", "nope"]).code, EXIT_FATAL);
}

#[test]
fn traffic_export_is_deterministic_and_counts_interconnections() {
    let dir = tempfile::tempdir().unwrap();
    let net = dir.path().join("net.geojson");
    write_network(&synth::four_way(), &net).unwrap();
    let state = dir.path().join("state.json");
    assert_eq!(run(&["--state", s(&state), "build", s(&net)]).code, EXIT_OK);
    let (x1, x2) = (dir.path().join("a.xml"), dir.path().join("b.xml"));
    assert_eq!(run(&["--state", s(&state), "export", "--format", "traffic-xml", "--out", s(&x1)]).code, EXIT_OK);
    assert_eq!(run(&["--state", s(&state), "export", "--format", "traffic-xml", "--out", s(&x2)]).code, EXIT_OK);
    let (a, b) = (fs::read(&x1).unwrap(), fs::read(&x2).unwrap());
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.matches("<interconnection ").count(), 12);
    assert!(text.contains("<lanegroup dir=\"fwd\">") && text.contains("<lanegroup dir=\"rev\">"));
    assert!(text.contains("kind=\"plain\""));
    let lane = text.lines().find(|l| l.trim_start().starts_with("<lane ")).unwrap();
    assert!(lane.trim_start().starts_with("<lane id=") && lane.contains("points=\""));
    let coords = lane.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
    for xy in coords.split(' ') {
        for v in xy.split(',') {
            assert_eq!(v.split('.').nth(1).map(str::len), Some(3), "{v}");
        }
    }
}

#[test]
fn roundabout_is_tagged_in_traffic_export() {
    let dir = tempfile::tempdir().unwrap();
    let net = dir.path().join("net.geojson");
    write_network(&synth::roundabout(Point2::new(0.0, 0.0), 12.0, "PL DE TEST"), &net).unwrap();
    let state = dir.path().join("state.json");
    let out = dir.path().join("out");
    let r = run(&["--state", s(&state), "build", s(&net), "--out", s(&out)]);
    assert!(r.code <= EXIT_DIAGNOSTICS, "{}", r.err);
    let xml = fs::read_to_string(out.join("traffic.xml")).unwrap();
    assert!(xml.contains("kind=\"roundabout\""));
    assert_eq!(features(&out.join("roundabouts.geojson")).len(), 1);
    let listed = run(&["detect-roundabouts", s(&net)]);
    let found: serde_json::Value = serde_json::from_str(&listed.out).unwrap();
    assert_eq!(found.as_array().unwrap().len(), 1);
}

#[test]
fn empty_store_exports_empty_collections() {
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("state.json");
    StreetModelStore::new().save(&state).unwrap();
    let out = dir.path().join("out");
    let r = run(&["--state", s(&state), "export", "--layers", "sections,lanes", "--out", s(&out)]);
    assert_eq!(r.code, EXIT_OK, "{}", r.err);
    assert!(features(&out.join("sections.geojson")).is_empty());
    assert!(features(&out.join("lanes.geojson")).is_empty());
    assert!(!out.join("blocks.geojson").exists());
}

#[test]
fn partition_validates_k() {
    let dir = tempfile::tempdir().unwrap();
    let net = dir.path().join("net.geojson");
    write_network(&synth::three_groups(500.0), &net).unwrap();
    assert_eq!(run(&["partition", s(&net), "--k", "0"]).code, EXIT_FATAL);
    let r = run(&["partition", s(&net), "--k", "3"]);
    assert_eq!(r.code, EXIT_OK, "{}", r.err);
    let parts: Vec<Vec<String>> = serde_json::from_str(&r.out).unwrap();
    assert_eq!(parts.len(), 3);
    for part in parts {
        let group = &part[0][..2];
        assert!(part.iter().all(|id| id.starts_with(group)), "{part:?}");
    }
}

#[test]
fn fatal_inputs() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["build", "--no-such-flag", "x"]).code, EXIT_FATAL);
    assert_eq!(run(&["build", s(&dir.path().join("missing.geojson"))]).code, EXIT_FATAL);
    let bad = dir.path().join("bad.geojson");
    fs::write(&bad, "{\"type\": \"FeatureCollection\",\n \"features\": [").unwrap();
    let r = run(&["build", s(&bad)]);
    assert_eq!(r.code, EXIT_FATAL);
    assert!(r.err.contains("bad.geojson") && r.err.contains("line"), "{}", r.err);
    let settings = dir.path().join("s.conf");
    fs::write(&settings, "radius.min = 0.2\nno.such.key = 1\n").unwrap();
    let r = run(&["--settings", s(&settings), "bench", "--grid", "3x3"]);
    assert_eq!(r.code, EXIT_FATAL);
    assert!(r.err.contains("line 2"), "{}", r.err);
    assert_eq!(run(&["--state", s(&dir.path().join("none.json")), "update", s(&bad)]).code, EXIT_FATAL);
}

#[test]
fn bench_reports_timings() {
    let dir = tempfile::tempdir().unwrap();
    let net = dir.path().join("grid.geojson");
    let r = run(&["bench", "--grid", "6x5", "--parallel", "2", "--compare-loop", "--write-net", s(&net)]);
    assert_eq!(r.code, EXIT_OK, "{}", r.err);
    let v: serde_json::Value = serde_json::from_str(&r.out).unwrap();
    assert_eq!(v["edges"], 6 * 4 + 5 * 5);
    assert_eq!(v["parallel_matches"], true);
    assert!(v["loop_junction_solves"].as_u64().unwrap() > v["junction_solves"].as_u64().unwrap());
    assert_eq!(features(&net).len(), 49);
}
