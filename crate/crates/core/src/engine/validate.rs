use crate::geom::{intersection, total_area, Polygon};
use crate::network::Topology;
use crate::Diagnostic;

use super::{ItemKind, StoreItem, StreetModelStore};

fn check_polygon(p: &Polygon, subject: &str, out: &mut Vec<Diagnostic>) {
    if !(p.area() > 0.0) || p.rings().flatten().any(|q| !q.is_finite()) {
        out.push(Diagnostic::new(subject, "degenerate or non-finite polygon"));
    }
}

/// Invariant checks on staged items: live ids and sound geometry.
pub(crate) fn check_item(item: &StoreItem, topo: &Topology, out: &mut Vec<Diagnostic>) {
    match item {
        StoreItem::Section(s) => {
            if !topo.edges.contains_key(&s.edge) {
                out.push(Diagnostic::new(s.edge.as_str(), "section of unknown edge"));
            }
            check_polygon(&s.polygon, s.edge.as_str(), out);
        }
        StoreItem::Intersection(s) => {
            if !topo.nodes.contains_key(&s.node) {
                out.push(Diagnostic::new(s.node.as_str(), "intersection of unknown node"));
            }
            check_polygon(&s.polygon, s.node.as_str(), out);
        }
        StoreItem::Block(b) => {
            if !topo.faces.contains_key(&b.face) {
                out.push(Diagnostic::new(b.face.as_str(), "block of unknown face"));
            }
            for p in &b.parts {
                check_polygon(p, b.face.as_str(), out);
            }
        }
        StoreItem::Lane(l) => {
            if !topo.edges.contains_key(&l.edge) || l.geometry.vertices().iter().any(|p| !p.is_finite()) {
                out.push(Diagnostic::new(l.id.as_str(), "lane of unknown edge or with bad geometry"));
            }
        }
        StoreItem::Interconnection(i) => {
            if !topo.nodes.contains_key(&i.node) || i.trajectory.vertices().iter().any(|p| !p.is_finite()) {
                out.push(Diagnostic::new(i.id.as_str(), "interconnection of unknown node or with bad geometry"));
            }
        }
        StoreItem::Roundabout(r) => {
            if !r.center.is_finite() || !(0.0..=1.0).contains(&r.score) {
                out.push(Diagnostic::new(r.id.as_str(), "roundabout with bad center or score"));
            }
        }
        StoreItem::Object(o) => {
            if o.host.as_ref().is_some_and(|h| !topo.edges.contains_key(h)) || !o.point.is_finite() {
                out.push(Diagnostic::new(o.id.as_str(), "object on unknown edge or at bad position"));
            }
        }
    }
}

/// Model invariants over the whole store: every item references live
/// topology ids with sound geometry, and no intersection surface overlaps
/// the sections of its incident edges.
pub fn validate_store(store: &StreetModelStore, topo: &Topology, grid: f64) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for kind in ItemKind::ALL {
        for (key, v) in store.iter(kind) {
            check_item(&v.item, topo, &mut out);
            if v.item.kind() != kind {
                out.push(Diagnostic::new(key.as_str(), "item filed under the wrong kind"));
            }
        }
    }
    for s in store.intersections() {
        let Some(edges) = topo.node_edges.get(&s.node) else { continue };
        let secs: Vec<Polygon> = edges.iter().filter_map(|e| store.section(e)).map(|x| x.polygon.clone()).collect();
        let overlap = total_area(&intersection(std::slice::from_ref(&s.polygon), &secs, grid));
        if overlap > 1e-3 {
            out.push(Diagnostic::new(s.node.as_str(), format!("intersection overlaps incident sections by {overlap:.4} m2")));
        }
    }
    for e in store.edge_states().keys() {
        if !topo.edges.contains_key(e) {
            out.push(Diagnostic::new(e.as_str(), "state kept for a removed edge"));
        }
    }
    out
}
