use std::collections::BTreeSet;
use std::time::Instant;

use streetgen::engine::{
    build, generate, partition_axes, run_workers, sync, validate_store, GenerateOptions, ItemKind, SemaphoreLedger,
    StreetModelStore,
};
use streetgen::geom::{difference, total_area, Polygon};
use streetgen::network::build_topology;
use streetgen::synth;
use streetgen::{EdgeId, Settings, Topology};

fn sym_diff(a: &Polygon, b: &Polygon) -> f64 {
    let g = 1e-6;
    total_area(&difference(std::slice::from_ref(a), std::slice::from_ref(b), g))
        + total_area(&difference(std::slice::from_ref(b), std::slice::from_ref(a), g))
}

fn built(topo: &Topology, s: &Settings) -> StreetModelStore {
    let mut st = StreetModelStore::new();
    build(&mut st, topo, s, GenerateOptions::default()).unwrap();
    st
}

/// Every surface of `a` matches `b` within `tol` symmetric-difference area.
fn assert_same_surfaces(a: &StreetModelStore, b: &StreetModelStore, tol: f64) {
    for kind in [ItemKind::Section, ItemKind::Intersection, ItemKind::Block, ItemKind::Lane, ItemKind::Interconnection] {
        let ka: BTreeSet<&String> = a.iter(kind).map(|(k, _)| k).collect();
        let kb: BTreeSet<&String> = b.iter(kind).map(|(k, _)| k).collect();
        assert_eq!(ka, kb, "{kind:?} keys differ");
    }
    for s in b.sections() {
        let d = sym_diff(&a.section(&s.edge).unwrap().polygon, &s.polygon);
        assert!(d <= tol, "section {} differs by {d}", s.edge);
    }
    for s in b.intersections() {
        let d = sym_diff(&a.intersection(&s.node).unwrap().polygon, &s.polygon);
        assert!(d <= tol, "intersection {} differs by {d}", s.node);
    }
    for blk in b.blocks() {
        let other = a.block(&blk.face).unwrap();
        let d = total_area(&difference(&other.parts, &blk.parts, 1e-6)) + total_area(&difference(&blk.parts, &other.parts, 1e-6));
        assert!(d <= tol, "block {} differs by {d}", blk.face);
    }
}

#[test]
fn full_grid_build_covers_every_edge() {
    let s = Settings::default();
    let topo = build_topology(&synth::grid(5, 5, 50.0), s.snap_tol).unwrap();
    let st = built(&topo, &s);
    assert_eq!(st.sections().count(), topo.edges.len());
    let inner = topo.nodes.keys().filter(|n| topo.degree(n) >= 2).count();
    assert_eq!(st.intersections().count(), inner);
    assert_eq!(st.blocks().count(), 16);
    assert!(validate_store(&st, &topo, 1e-6).is_empty());
    for b in st.blocks() {
        assert!(b.area() > 0.0 && b.area() < 2500.0);
    }
}

#[test]
fn incremental_update_matches_full_rebuild() {
    let s = Settings::default();
    let mut axes = synth::grid(10, 10, 50.0);
    let topo = build_topology(&axes, s.snap_tol).unwrap();
    assert_eq!(topo.edges.len(), 180);
    let mut st = built(&topo, &s);
    let target = axes.iter().position(|a| a.id.as_str() == "h4_3").unwrap();
    axes[target].half_width = 4.5;
    let edited = build_topology(&axes, s.snap_tol).unwrap();
    let t0 = Instant::now();
    let report = sync(&mut st, &edited, &s, GenerateOptions::default()).unwrap();
    let took = t0.elapsed();
    assert!(!report.is_empty());
    assert!(took.as_secs_f64() < 1.0, "update took {took:?}");
    let fresh = built(&edited, &s);
    assert_same_surfaces(&st, &fresh, 1e-6);
    // a second sync has nothing left to do
    assert!(sync(&mut st, &edited, &s, GenerateOptions::default()).unwrap().is_empty());
}

#[test]
fn batch_solves_each_junction_once() {
    let s = Settings::default();
    let topo = build_topology(&synth::grid(6, 6, 50.0), s.snap_tol).unwrap();
    let opts = GenerateOptions { roundabouts: false, fail_at: None };
    let all: BTreeSet<EdgeId> = topo.edges.keys().cloned().collect();
    let mut st = StreetModelStore::new();
    let r = generate(&mut st, &topo, &all, &s, opts).unwrap();
    assert_eq!(r.junction_solves, topo.nodes.keys().filter(|n| topo.degree(n) >= 2).count());
    let mut looped = StreetModelStore::new();
    let mut solves = 0;
    for e in &all {
        solves += generate(&mut looped, &topo, &BTreeSet::from([e.clone()]), &s, opts).unwrap().junction_solves;
    }
    assert!(solves > 2 * r.junction_solves);
    assert_same_surfaces(&looped, &st, 1e-9);
}

#[test]
fn workers_match_single_worker() {
    let s = Settings::default();
    let topo = build_topology(&synth::grid(6, 6, 50.0), s.snap_tol).unwrap();
    let single = built(&topo, &s);
    let parts = partition_axes(&topo, 4, s.partition_seed, s.partition_max_iter).unwrap();
    for seed in 1..4 {
        let store = parking_lot::RwLock::new(StreetModelStore::new());
        let ledger = SemaphoreLedger::new();
        let stats = run_workers(&store, &ledger, &topo, &s, &parts, 3, seed).unwrap();
        assert!(stats.processed.values().all(|&n| n == 1));
        assert_eq!(stats.processed.len(), topo.axes.len());
        assert_eq!(store.into_inner().fingerprint(), single.fingerprint());
    }
}

#[test]
fn stress_suite_builds() {
    let s = Settings::default();
    for (name, axes) in synth::stress_suite() {
        let topo = build_topology(&axes, s.snap_tol).unwrap();
        let st = built(&topo, &s);
        let v = validate_store(&st, &topo, 1e-6);
        assert!(v.is_empty(), "{name}: {v:?}");
    }
}
