use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::{AxisId, EdgeId, FaceId, NetworkError, NodeId, RoadAxis};
use crate::geom::{
    closest_point_on_segment, normalize_angle, ring_signed_area, trace_faces, BBox, GridIndex, Point2, Polygon,
    Polyline,
};
use crate::Diagnostic;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub position: Point2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub id: EdgeId,
    pub axis: AxisId,
    pub start: NodeId,
    pub end: NodeId,
    pub geometry: Polyline,
}

/// A face of the axis arrangement. Bounded faces carry their ring; the
/// universal face collects the outer boundaries of every component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Face {
    pub id: FaceId,
    /// Bounding half-edges: `(edge, true)` when the face lies left of the edge.
    pub boundary: Vec<(EdgeId, bool)>,
    pub ring: Vec<Point2>,
    pub holes: Vec<Vec<Point2>>,
    pub universal: bool,
}

impl Face {
    pub fn edge_ids(&self) -> BTreeSet<EdgeId> {
        self.boundary.iter().map(|(e, _)| e.clone()).collect()
    }

    pub fn polygon(&self) -> Option<Polygon> {
        if self.universal {
            return None;
        }
        Polygon::new(self.ring.clone(), self.holes.clone()).ok()
    }

    pub fn area(&self) -> f64 {
        self.polygon().map_or(0.0, |p| p.area())
    }
}

/// Edge incident to a junction, with its geometry oriented away from the node.
#[derive(Debug, Clone, PartialEq)]
pub struct IncidentEdge {
    pub edge: EdgeId,
    /// The edge starts at the junction node.
    pub outgoing: bool,
    pub azimuth: f64,
    pub away: Polyline,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JunctionNode {
    pub node: NodeId,
    pub center: Point2,
    /// Sorted by azimuth, counter-clockwise from the x axis.
    pub incident: Vec<IncidentEdge>,
}

impl JunctionNode {
    pub fn degree(&self) -> usize {
        self.incident.len()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Topology {
    pub snap_tol: f64,
    pub axes: BTreeMap<AxisId, RoadAxis>,
    pub nodes: BTreeMap<NodeId, Node>,
    pub edges: BTreeMap<EdgeId, Edge>,
    pub faces: BTreeMap<FaceId, Face>,
    pub node_edges: BTreeMap<NodeId, Vec<EdgeId>>,
    pub axis_edges: BTreeMap<AxisId, Vec<EdgeId>>,
    /// Bounded faces on either side of each edge.
    #[serde(default)]
    pub edge_faces: BTreeMap<EdgeId, Vec<FaceId>>,
    pub diagnostics: Vec<Diagnostic>,
}

impl Topology {
    pub fn edge(&self, id: &EdgeId) -> Result<&Edge, NetworkError> {
        self.edges.get(id).ok_or_else(|| NetworkError::NotFound(format!("edge {id}")))
    }

    pub fn node(&self, id: &NodeId) -> Result<&Node, NetworkError> {
        self.nodes.get(id).ok_or_else(|| NetworkError::NotFound(format!("node {id}")))
    }

    /// Attributes of the axis an edge was cut from.
    pub fn axis_of(&self, edge: &EdgeId) -> Result<&RoadAxis, NetworkError> {
        let e = self.edge(edge)?;
        self.axes.get(&e.axis).ok_or_else(|| NetworkError::NotFound(format!("axis {}", e.axis)))
    }

    pub fn degree(&self, node: &NodeId) -> usize {
        self.node_edges.get(node).map_or(0, Vec::len)
    }

    pub fn junction(&self, node: &NodeId) -> Result<JunctionNode, NetworkError> {
        let n = self.node(node)?;
        let mut incident = Vec::new();
        for eid in self.node_edges.get(node).into_iter().flatten() {
            let e = &self.edges[eid];
            if e.start == *node {
                incident.push(IncidentEdge {
                    edge: eid.clone(),
                    outgoing: true,
                    azimuth: normalize_angle(e.geometry.start_direction().angle()),
                    away: e.geometry.clone(),
                });
            }
            if e.end == *node {
                let away = e.geometry.reversed();
                incident.push(IncidentEdge {
                    edge: eid.clone(),
                    outgoing: false,
                    azimuth: normalize_angle(away.start_direction().angle()),
                    away,
                });
            }
        }
        incident.sort_by(|a, b| a.azimuth.total_cmp(&b.azimuth).then_with(|| a.edge.cmp(&b.edge)));
        Ok(JunctionNode { node: node.clone(), center: n.position, incident })
    }

    /// Bounded faces adjacent to a node.
    pub fn faces_at(&self, node: &NodeId) -> Vec<FaceId> {
        let Some(edges) = self.node_edges.get(node) else { return Vec::new() };
        let set: BTreeSet<&FaceId> = edges.iter().filter_map(|e| self.edge_faces.get(e)).flatten().collect();
        set.into_iter().cloned().collect()
    }

    /// Number of connected components of the edge graph.
    pub fn component_count(&self) -> usize {
        let ids: Vec<&NodeId> = self.nodes.keys().collect();
        let index: HashMap<&NodeId, usize> = ids.iter().enumerate().map(|(i, n)| (*n, i)).collect();
        let mut parent: Vec<usize> = (0..ids.len()).collect();
        for e in self.edges.values() {
            let (a, b) = (find(&mut parent, index[&e.start]), find(&mut parent, index[&e.end]));
            if a != b {
                parent[a] = b;
            }
        }
        (0..ids.len()).filter(|&i| find(&mut parent, i) == i).count()
    }

    /// V - E + F (F counting bounded faces and the universal face once) equals 1 + C.
    pub fn euler_holds(&self) -> bool {
        let v = self.nodes.len() as i64;
        let e = self.edges.len() as i64;
        let f = self.faces.values().filter(|f| !f.universal).count() as i64 + 1;
        v - e + f == 1 + self.component_count() as i64
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum EventKind {
    Split,
    Endpoint,
}

#[derive(Debug, Clone, Copy)]
struct Event {
    axis: usize,
    s: f64,
    point: Point2,
    kind: EventKind,
}

struct Seg {
    axis: usize,
    a: Point2,
    b: Point2,
    s0: f64,
    /// The segment starts (resp. ends) at an endpoint of its axis.
    first: bool,
    last: bool,
}

fn node_id(p: Point2, taken: &mut BTreeSet<String>) -> NodeId {
    let base = format!("n{}_{}", (p.x * 1000.0).round() as i64, (p.y * 1000.0).round() as i64);
    let mut id = base.clone();
    let mut k = 1;
    while taken.contains(&id) {
        id = format!("{base}_{k}");
        k += 1;
    }
    taken.insert(id.clone());
    NodeId(id)
}

/// Snap axes into a planar graph: endpoints closer than `snap_tol` merge,
/// crossings and near-miss T junctions split the axes into edges.
/// Axes that fail validation are skipped with a diagnostic.
pub fn build_topology(axes: &[RoadAxis], snap_tol: f64) -> Result<Topology, NetworkError> {
    if !(snap_tol > 0.0) || !snap_tol.is_finite() {
        return Err(NetworkError::InvalidParameter(format!("snap tolerance {snap_tol} must be positive")));
    }
    let mut topo = Topology { snap_tol, ..Default::default() };
    let mut sorted: Vec<&RoadAxis> = axes.iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));
    let mut valid: Vec<&RoadAxis> = Vec::new();
    for a in sorted {
        if topo.axes.contains_key(&a.id) {
            topo.diagnostics.push(Diagnostic::new(a.id.as_str(), "duplicate axis id, later occurrence ignored"));
            continue;
        }
        match a.validate(snap_tol) {
            Ok(()) => {
                topo.axes.insert(a.id.clone(), a.clone());
                valid.push(a);
            }
            Err(msg) => topo.diagnostics.push(Diagnostic::new(a.id.as_str(), msg)),
        }
    }

    let mut segs = Vec::new();
    let mut events = Vec::new();
    for (ai, a) in valid.iter().enumerate() {
        let v = a.geometry.vertices();
        let mut s = 0.0;
        let n = v.len() - 1;
        for i in 0..n {
            segs.push(Seg { axis: ai, a: v[i], b: v[i + 1], s0: s, first: i == 0, last: i + 1 == n });
            s += v[i].dist(v[i + 1]);
        }
        events.push(Event { axis: ai, s: 0.0, point: v[0], kind: EventKind::Endpoint });
        events.push(Event { axis: ai, s, point: v[n], kind: EventKind::Endpoint });
        if v[0].dist(v[n]) <= snap_tol {
            // closed axis: a middle node keeps it from collapsing into a self loop
            let mid = crate::geom::interpolate(&a.geometry, 0.5 * s).expect("in range");
            events.push(Event { axis: ai, s: 0.5 * s, point: mid, kind: EventKind::Split });
        }
    }

    let index = GridIndex::with_boxes(
        segs.iter().map(|s| BBox::of([s.a, s.b]).expect("two points").expanded(snap_tol)),
        4.0 * snap_tol,
    );
    let touch = 1e-9;
    for (i, si) in segs.iter().enumerate() {
        let q = BBox::of([si.a, si.b]).expect("two points").expanded(snap_tol);
        for j in index.query(&q) {
            if j <= i {
                continue;
            }
            let sj = &segs[j];
            let same_axis = si.axis == sj.axis;
            if same_axis && (j == i + 1) {
                continue;
            }
            let (li, lj) = (si.a.dist(si.b), sj.a.dist(sj.b));
            // endpoint of one segment on or near the other
            for (p, pi_end, this, other, lo) in [
                (si.a, si.first, si, sj, lj),
                (si.b, si.last, si, sj, lj),
                (sj.a, sj.first, sj, si, li),
                (sj.b, sj.last, sj, si, li),
            ] {
                let (q, t) = closest_point_on_segment(other.a, other.b, p);
                let d = q.dist(p);
                if d <= touch || (pi_end && d <= snap_tol) {
                    events.push(Event { axis: other.axis, s: other.s0 + t * lo, point: q, kind: EventKind::Split });
                    let s_here = if p == this.a { this.s0 } else { this.s0 + this.a.dist(this.b) };
                    let kind = if pi_end { EventKind::Endpoint } else { EventKind::Split };
                    events.push(Event { axis: this.axis, s: s_here, point: p, kind });
                }
            }
            // proper crossing
            let r = si.b - si.a;
            let sv = sj.b - sj.a;
            let den = r.cross(sv);
            if den.abs() > 1e-12 * li * lj {
                let qp = sj.a - si.a;
                let t = qp.cross(sv) / den;
                let u = qp.cross(r) / den;
                if t > 0.0 && t < 1.0 && u > 0.0 && u < 1.0 {
                    let x = si.a + r * t;
                    events.push(Event { axis: si.axis, s: si.s0 + t * li, point: x, kind: EventKind::Split });
                    events.push(Event { axis: sj.axis, s: sj.s0 + u * lj, point: x, kind: EventKind::Split });
                }
            }
        }
    }

    // cluster event points within the snap tolerance
    let cluster_index = GridIndex::with_boxes(
        events.iter().map(|e| BBox { min: e.point, max: e.point }.expanded(0.5 * snap_tol)),
        snap_tol,
    );
    let mut parent: Vec<usize> = (0..events.len()).collect();
    for (i, e) in events.iter().enumerate() {
        for j in cluster_index.query(&BBox { min: e.point, max: e.point }.expanded(0.5 * snap_tol)) {
            if j > i && events[j].point.dist(e.point) <= snap_tol {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut rep: HashMap<usize, (bool, Point2)> = HashMap::new();
    for (i, e) in events.iter().enumerate() {
        let root = find(&mut parent, i);
        let cand = (e.kind == EventKind::Split, e.point);
        rep.entry(root)
            .and_modify(|cur| {
                let better = match (cand.0, cur.0) {
                    (true, false) => true,
                    (false, true) => false,
                    _ => cand.1.lex_cmp(&cur.1).is_lt(),
                };
                if better {
                    *cur = cand;
                }
            })
            .or_insert(cand);
    }
    let mut roots: Vec<(usize, Point2)> = rep.iter().map(|(&r, &(_, p))| (r, p)).collect();
    roots.sort_by(|a, b| a.1.lex_cmp(&b.1));
    let mut taken = BTreeSet::new();
    let mut root_node: HashMap<usize, NodeId> = HashMap::new();
    for (r, p) in roots {
        let id = node_id(p, &mut taken);
        root_node.insert(r, id.clone());
        topo.nodes.insert(id.clone(), Node { id, position: p });
    }

    // cut every axis at its events
    let mut per_axis: Vec<Vec<(f64, NodeId)>> = vec![Vec::new(); valid.len()];
    for (i, e) in events.iter().enumerate() {
        let root = find(&mut parent, i);
        per_axis[e.axis].push((e.s, root_node[&root].clone()));
    }
    for (ai, a) in valid.iter().enumerate() {
        let list = &mut per_axis[ai];
        list.sort_by(|x, y| x.0.total_cmp(&y.0).then_with(|| x.1.cmp(&y.1)));
        // runs of the same node: (node, first s, last s)
        let mut runs: Vec<(NodeId, f64, f64)> = Vec::new();
        for (s, n) in list.iter() {
            match runs.last_mut() {
                Some(last) if last.0 == *n => last.2 = *s,
                _ => runs.push((n.clone(), *s, *s)),
            }
        }
        let mut k = 0;
        let mut ids = Vec::new();
        for w in runs.windows(2) {
            let (n0, _, s0) = &w[0];
            let (n1, s1, _) = &w[1];
            let p0 = topo.nodes[n0].position;
            let p1 = topo.nodes[n1].position;
            let mut pts = match a.geometry.slice(*s0, *s1) {
                Ok(pl) => pl.into_vertices(),
                Err(_) => vec![p0, p1],
            };
            let last = pts.len() - 1;
            pts[0] = p0;
            pts[last] = p1;
            let Ok(geometry) = Polyline::new(pts) else {
                topo.diagnostics.push(Diagnostic::new(a.id.as_str(), "degenerate piece dropped while splitting"));
                continue;
            };
            let id = EdgeId(format!("{}#{k}", a.id));
            k += 1;
            topo.node_edges.entry(n0.clone()).or_default().push(id.clone());
            if n1 != n0 {
                topo.node_edges.entry(n1.clone()).or_default().push(id.clone());
            }
            ids.push(id.clone());
            topo.edges.insert(id.clone(), Edge { id, axis: a.id.clone(), start: n0.clone(), end: n1.clone(), geometry });
        }
        if ids.is_empty() {
            topo.diagnostics.push(Diagnostic::new(a.id.as_str(), "axis collapsed onto a single node"));
            topo.axes.remove(&a.id);
        } else {
            topo.axis_edges.insert(a.id.clone(), ids);
        }
    }
    topo.nodes.retain(|id, _| topo.node_edges.contains_key(id));
    topo.faces = compute_faces(&topo);
    for f in topo.faces.values().filter(|f| !f.universal) {
        for (e, _) in &f.boundary {
            let list = topo.edge_faces.entry(e.clone()).or_default();
            if !list.contains(&f.id) {
                list.push(f.id.clone());
            }
        }
    }
    Ok(topo)
}

/// Drop back-and-forth spikes left by dangling edges.
fn clean_ring(ring: &[Point2]) -> Vec<Point2> {
    let mut st: Vec<Point2> = Vec::with_capacity(ring.len());
    for &p in &ring[..ring.len().saturating_sub(1)] {
        st.push(p);
        while st.len() >= 3 && st[st.len() - 1] == st[st.len() - 3] {
            st.pop();
            st.pop();
        }
    }
    loop {
        let n = st.len();
        if n >= 3 && st[n - 2] == st[0] {
            st.truncate(n - 2);
        } else if n >= 3 && st[n - 1] == st[1] {
            st.remove(0);
            st.pop();
        } else {
            break;
        }
    }
    if let Some(&f) = st.first() {
        st.push(f);
    }
    st
}

fn compute_faces(topo: &Topology) -> BTreeMap<FaceId, Face> {
    let node_ids: Vec<&NodeId> = topo.nodes.keys().collect();
    let nidx: HashMap<&NodeId, usize> = node_ids.iter().enumerate().map(|(i, n)| (*n, i)).collect();
    let edges: Vec<&Edge> = topo.edges.values().collect();
    let graph: Vec<(usize, usize, &[Point2])> =
        edges.iter().map(|e| (nidx[&e.start], nidx[&e.end], e.geometry.vertices())).collect();
    let cycles = trace_faces(node_ids.len(), &graph);

    let mut parent: Vec<usize> = (0..node_ids.len()).collect();
    for &(u, v, _) in &graph {
        let (a, b) = (find(&mut parent, u), find(&mut parent, v));
        if a != b {
            parent[a] = b;
        }
    }

    let mut bounded: Vec<(usize, Face, f64)> = Vec::new();
    let mut outer: Vec<(usize, Vec<Point2>)> = Vec::new();
    let mut universal = Face { id: FaceId::universal(), boundary: Vec::new(), ring: Vec::new(), holes: Vec::new(), universal: true };
    for c in cycles {
        let comp = find(&mut parent, graph[c.half_edges[0].0].0);
        let boundary: Vec<(EdgeId, bool)> = c.half_edges.iter().map(|&(e, f)| (edges[e].id.clone(), f)).collect();
        let ring = clean_ring(&c.ring);
        let area = ring_signed_area(&ring);
        if c.signed_area > 1e-9 && area > 1e-9 {
            let id = boundary
                .iter()
                .map(|(e, fwd)| format!("f:{}:{}", e, if *fwd { 'L' } else { 'R' }))
                .min()
                .expect("non-empty cycle");
            bounded.push((comp, Face { id: FaceId(id), boundary, ring, holes: Vec::new(), universal: false }, area));
        } else {
            if c.signed_area < 0.0 {
                outer.push((comp, ring));
            }
            universal.boundary.extend(boundary);
        }
    }
    for (comp, ring) in outer {
        if ring.len() < 4 || ring_signed_area(&ring).abs() <= 1e-9 {
            continue;
        }
        let probe = ring[0];
        let host = bounded
            .iter()
            .enumerate()
            .filter(|(_, (c, f, _))| *c != comp && crate::geom::ring_contains(&f.ring, probe))
            .min_by(|a, b| a.1 .2.total_cmp(&b.1 .2))
            .map(|(i, _)| i);
        if let Some(i) = host {
            bounded[i].1.holes.push(ring);
        }
    }
    let mut out: BTreeMap<FaceId, Face> = bounded.into_iter().map(|(_, f, _)| (f.id.clone(), f)).collect();
    out.insert(universal.id.clone(), universal);
    out
}

/// The given edges plus every edge sharing a node with one of them.
pub fn one_neighborhood<'a>(
    topo: &Topology,
    edges: impl IntoIterator<Item = &'a EdgeId>,
) -> Result<BTreeSet<EdgeId>, NetworkError> {
    let mut out = BTreeSet::new();
    for id in edges {
        let e = topo.edge(id)?;
        out.insert(id.clone());
        for n in [&e.start, &e.end] {
            out.extend(topo.node_edges.get(n).into_iter().flatten().cloned());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn axis(id: &str, pts: &[(f64, f64)]) -> RoadAxis {
        RoadAxis::new(id, Polyline::new(pts.iter().map(|&(x, y)| Point2::new(x, y)).collect()).unwrap(), 3.0)
    }

    #[test]
    fn plus_cross() {
        let axes = [
            axis("e", &[(0.0, 0.0), (10.0, 0.0)]),
            axis("n", &[(0.0, 0.0), (0.0, 10.0)]),
            axis("w", &[(0.0, 0.0), (-10.0, 0.0)]),
            axis("s", &[(0.0, 0.0), (0.0, -10.0)]),
        ];
        let t = build_topology(&axes, 0.05).unwrap();
        assert_eq!(t.nodes.len(), 5);
        assert_eq!(t.edges.len(), 4);
        assert_eq!(t.degree(&NodeId("n0_0".into())), 4);
        assert_eq!(t.faces.len(), 1);
        assert!(t.euler_holds());
    }

    #[test]
    fn near_endpoints_snap() {
        let axes = [axis("a", &[(0.0, 0.0), (10.0, 0.0)]), axis("b", &[(10.005, 0.0), (10.0, 10.0)])];
        let t = build_topology(&axes, 0.01).unwrap();
        assert_eq!(t.nodes.len(), 3);
    }

    #[test]
    fn x_crossing_is_split() {
        let axes = [axis("a", &[(-5.0, -5.0), (5.0, 5.0)]), axis("b", &[(-5.0, 5.0), (5.0, -5.0)])];
        let t = build_topology(&axes, 0.05).unwrap();
        assert_eq!(t.nodes.len(), 5);
        assert_eq!(t.edges.len(), 4);
        assert!(t.nodes.values().any(|n| n.position.dist(Point2::new(0.0, 0.0)) < 1e-12));
    }

    #[test]
    fn t_near_miss_is_split() {
        let axes = [axis("a", &[(0.0, 0.0), (10.0, 0.0)]), axis("b", &[(5.0, 0.03), (5.0, 8.0)])];
        let t = build_topology(&axes, 0.05).unwrap();
        assert_eq!(t.edges.len(), 3);
        let node = t.nodes.values().find(|n| t.degree(&n.id) == 3).unwrap();
        assert!(node.position.dist(Point2::new(5.0, 0.0)) < 1e-12);
    }

    #[test]
    fn square_face() {
        let axes = [axis("sq", &[(0.0, 0.0), (10.0, 0.0), (10.0, 10.0), (0.0, 10.0), (0.0, 0.0)])];
        let t = build_topology(&axes, 0.05).unwrap();
        let bounded: Vec<&Face> = t.faces.values().filter(|f| !f.universal).collect();
        assert_eq!(bounded.len(), 1);
        assert!((bounded[0].area() - 100.0).abs() < 1e-9);
        assert!(t.euler_holds());
    }

    #[test]
    fn short_axis_rejected() {
        let axes = [axis("ok", &[(0.0, 0.0), (10.0, 0.0)]), axis("tiny", &[(20.0, 0.0), (20.01, 0.0)])];
        let t = build_topology(&axes, 0.05).unwrap();
        assert_eq!(t.edges.len(), 1);
        assert_eq!(t.diagnostics.len(), 1);
        assert_eq!(t.diagnostics[0].subject, "tiny");
    }

    #[test]
    fn neighborhood() {
        let axes = [
            axis("a", &[(0.0, 0.0), (10.0, 0.0)]),
            axis("b", &[(10.0, 0.0), (20.0, 0.0)]),
            axis("c", &[(20.0, 0.0), (30.0, 0.0)]),
            axis("d", &[(50.0, 0.0), (60.0, 0.0)]),
        ];
        let t = build_topology(&axes, 0.05).unwrap();
        let mid = EdgeId("b#0".into());
        assert_eq!(one_neighborhood(&t, [&mid]).unwrap().len(), 3);
        let iso = EdgeId("d#0".into());
        assert_eq!(one_neighborhood(&t, [&iso]).unwrap().into_iter().collect::<Vec<_>>(), vec![iso.clone()]);
        assert!(matches!(one_neighborhood(&t, [&EdgeId("zz".into())]), Err(NetworkError::NotFound(_))));
    }

    #[test]
    fn spike_cleaning() {
        let p = |x: f64, y: f64| Point2::new(x, y);
        let ring = [p(0.0, 0.0), p(1.0, 0.0), p(2.0, 0.0), p(1.0, 0.0), p(1.0, 1.0), p(0.0, 0.0)];
        assert_eq!(clean_ring(&ring), vec![p(0.0, 0.0), p(1.0, 0.0), p(1.0, 1.0), p(0.0, 0.0)]);
    }
}
