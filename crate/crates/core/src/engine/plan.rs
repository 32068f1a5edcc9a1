use std::collections::{BTreeSet, HashMap};
use std::rc::Rc;

use super::validate::check_item;
use super::{
    edge_state, settings_hash, EdgeState, EngineError, GenerateOptions, Group, ItemKind, ObjectDef, Op, PlacedObject,
    Stage, StoreItem, StreetModelStore,
};
use crate::geom::{difference, Polygon, Polyline};
use crate::junction::{solve_junction, JunctionSolution};
use crate::network::{one_neighborhood, EdgeId, FaceId, NodeId, Topology};
use crate::objects::{crossing_surface, place_object};
use crate::settings::Settings;
use crate::surface::{city_block, cut_sections, intersection_surface, width_transition, EdgeCut, IntersectionSurface};
use crate::traffic::{detect_roundabouts, generate_interconnections, generate_lanes, IncidentLane, LaneLayout};
use crate::Diagnostic;

/// Staged results of one generation, applied atomically by the store.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChangeSet {
    pub ops: Vec<Op>,
    pub edge_states: Vec<(EdgeId, Option<EdgeState>)>,
    pub settings_hash: Option<String>,
    pub diagnostics: Vec<Diagnostic>,
    pub junction_solves: usize,
}

/// Memoized pipeline over an immutable topology: every junction, edge cut
/// and intersection is computed at most once per planning run.
struct Planner<'a> {
    topo: &'a Topology,
    settings: &'a Settings,
    junctions: HashMap<NodeId, Option<Rc<JunctionSolution>>>,
    cuts: HashMap<EdgeId, Option<Rc<EdgeCut>>>,
    inters: HashMap<NodeId, Option<Rc<IntersectionSurface>>>,
    lanes: HashMap<EdgeId, Rc<LaneLayout>>,
    solves: usize,
    diags: BTreeSet<Diagnostic>,
}

impl<'a> Planner<'a> {
    fn new(topo: &'a Topology, settings: &'a Settings) -> Self {
        Planner {
            topo,
            settings,
            junctions: HashMap::new(),
            cuts: HashMap::new(),
            inters: HashMap::new(),
            lanes: HashMap::new(),
            solves: 0,
            diags: BTreeSet::new(),
        }
    }

    fn diag(&mut self, subject: &str, msg: impl Into<String>) {
        self.diags.insert(Diagnostic::new(subject, msg));
    }

    fn junction(&mut self, n: &NodeId) -> Option<Rc<JunctionSolution>> {
        if let Some(j) = self.junctions.get(n) {
            return j.clone();
        }
        self.solves += 1;
        let j = match solve_junction(self.topo, n, self.settings) {
            Ok(j) => {
                self.diags.extend(j.diagnostics.iter().cloned());
                Some(Rc::new(j))
            }
            Err(e) => {
                self.diag(n.as_str(), format!("junction not solved: {e}"));
                None
            }
        };
        self.junctions.insert(n.clone(), j.clone());
        j
    }

    fn border(&mut self, e: &EdgeId, n: &NodeId, first: bool) -> Option<f64> {
        if self.topo.degree(n) < 2 {
            return None;
        }
        let j = self.junction(n)?;
        let mut it = j.borders.iter().filter(|b| b.edge == *e);
        let b = if first { it.next() } else { it.last() };
        b.map(|b| b.s)
    }

    fn cut(&mut self, e: &EdgeId) -> Option<Rc<EdgeCut>> {
        if let Some(c) = self.cuts.get(e) {
            return c.clone();
        }
        let topo = self.topo;
        let edge = &topo.edges[e];
        let hw = topo.axis_of(e).map_or(0.0, |a| a.half_width);
        let len = edge.geometry.length();
        let lo = self.border(e, &edge.start, true);
        let hi = self.border(e, &edge.end, false).map(|s| len - s);
        let c = match cut_sections(e, &edge.geometry, hw, lo, hi, self.settings) {
            Ok(c) => {
                self.diags.extend(c.diagnostics.iter().cloned());
                Some(Rc::new(c))
            }
            Err(err) => {
                self.diag(e.as_str(), format!("section not built: {err}"));
                None
            }
        };
        self.cuts.insert(e.clone(), c.clone());
        c
    }

    fn incident_sections(&mut self, n: &NodeId) -> Vec<Polygon> {
        let topo = self.topo;
        let mut out = Vec::new();
        for e in topo.node_edges.get(n).into_iter().flatten() {
            if let Some(s) = self.cut(e).and_then(|c| c.section.as_ref().map(|s| s.polygon.clone())) {
                out.push(s);
            }
        }
        out
    }

    /// Width transition across a degree-2 node, spanning both borders.
    fn transition(&mut self, n: &NodeId, j: &JunctionSolution) -> Result<IntersectionSurface, String> {
        let jn = self.topo.junction(n).map_err(|e| e.to_string())?;
        let (i0, i1) = (&jn.incident[0], &jn.incident[1]);
        let s_of = |e: &EdgeId| j.borders.iter().find(|b| b.edge == *e).map(|b| b.s).unwrap_or(0.0);
        let (s0, s1) = (s_of(&i0.edge), s_of(&i1.edge));
        let a = i0.away.slice(0.0, s0).map_err(|e| e.to_string())?.reversed();
        let b = i1.away.slice(0.0, s1).map_err(|e| e.to_string())?;
        let mut pts = a.into_vertices();
        pts.extend_from_slice(&b.vertices()[1..]);
        let window = Polyline::new(pts).map_err(|e| e.to_string())?;
        let hw = |e: &EdgeId| self.topo.axis_of(e).map_or(0.0, |a| a.half_width);
        let (w0, w1) = (hw(&i0.edge), hw(&i1.edge));
        let poly = width_transition(&window, w0, w1, self.settings.transition_mode, window.length(), self.settings)
            .map_err(|e| e.to_string())?;
        let sections = self.incident_sections(n);
        let parts = difference(&[poly], &sections, self.settings.precision.snap_grid);
        let polygon = parts
            .iter()
            .find(|p| p.contains(j.center))
            .or_else(|| parts.iter().max_by(|a, b| a.area().total_cmp(&b.area())))
            .cloned()
            .ok_or_else(|| "transition swallowed by sections".to_string())?;
        Ok(IntersectionSurface { node: n.clone(), polygon, arcs: Vec::new() })
    }

    fn intersection(&mut self, n: &NodeId) -> Option<Rc<IntersectionSurface>> {
        if let Some(s) = self.inters.get(n) {
            return s.clone();
        }
        let topo = self.topo;
        let mut out = None;
        if topo.degree(n) >= 2 {
            if let Some(j) = self.junction(n) {
                let res = if j.transition.is_some() {
                    self.transition(n, &j)
                } else {
                    let mut scraps = Vec::new();
                    for e in &topo.node_edges[n] {
                        let edge = &topo.edges[e];
                        if let Some(c) = self.cut(e) {
                            if edge.start == *n {
                                scraps.extend(c.start_scrap.iter().cloned());
                            }
                            if edge.end == *n {
                                scraps.extend(c.end_scrap.iter().cloned());
                            }
                        }
                    }
                    let sections = self.incident_sections(n);
                    intersection_surface(n, j.center, &j.corners, &scraps, &sections, self.settings)
                        .map_err(|e| e.to_string())
                };
                match res {
                    Ok(s) => out = Some(Rc::new(s)),
                    Err(e) => self.diag(n.as_str(), format!("intersection not built: {e}")),
                }
            }
        }
        self.inters.insert(n.clone(), out.clone());
        out
    }

    fn lanes(&mut self, e: &EdgeId) -> Rc<LaneLayout> {
        if let Some(l) = self.lanes.get(e) {
            return l.clone();
        }
        let edge = &self.topo.edges[e];
        let l = match self.topo.axis_of(e) {
            Ok(a) => generate_lanes(e, &edge.geometry, a.half_width, a.lane_count, a.direction, self.settings),
            Err(_) => LaneLayout::default(),
        };
        self.diags.extend(l.diagnostics.iter().cloned());
        let l = Rc::new(l);
        self.lanes.insert(e.clone(), l.clone());
        l
    }

    fn block(&mut self, f: &FaceId) -> Option<crate::surface::CityBlock> {
        let topo = self.topo;
        let face = &topo.faces[f];
        let Some(poly) = face.polygon() else {
            self.diag(f.as_str(), "face ring is not a valid polygon");
            return None;
        };
        let mut surfaces = Vec::new();
        let mut nodes = BTreeSet::new();
        for e in face.edge_ids() {
            if let Some(s) = self.cut(&e).and_then(|c| c.section.as_ref().map(|s| s.polygon.clone())) {
                surfaces.push(s);
            }
            let edge = &topo.edges[&e];
            nodes.insert(edge.start.clone());
            nodes.insert(edge.end.clone());
        }
        for n in &nodes {
            if let Some(s) = self.intersection(n) {
                surfaces.push(s.polygon.clone());
            }
        }
        Some(city_block(f, &poly, &surfaces, self.settings))
    }
}

/// Compute everything that depends on `scope`: sections and lanes of the
/// scope's one-neighborhood, intersections and interconnections at its
/// nodes, blocks of the faces around those nodes, objects hosted there.
pub fn plan(
    store: &StreetModelStore,
    topo: &Topology,
    scope: &BTreeSet<EdgeId>,
    settings: &Settings,
    opts: GenerateOptions,
) -> Result<ChangeSet, EngineError> {
    for e in scope {
        topo.edge(e)?;
    }
    let e1 = one_neighborhood(topo, scope)?;
    let mut v1: BTreeSet<NodeId> = BTreeSet::new();
    for e in &e1 {
        let edge = &topo.edges[e];
        v1.insert(edge.start.clone());
        v1.insert(edge.end.clone());
    }
    let mut faces: BTreeSet<FaceId> = BTreeSet::new();
    for n in &v1 {
        faces.extend(topo.faces_at(n));
    }

    let mut p = Planner::new(topo, settings);
    let mut ops = Vec::new();
    let mut edge_states = Vec::new();
    for e in &e1 {
        match p.cut(e).and_then(|c| c.section.clone()) {
            Some(s) => ops.push(Op::Upsert(e.to_string(), StoreItem::Section(s))),
            None => ops.push(Op::Delete(ItemKind::Section, e.to_string())),
        }
        let lanes = p.lanes(e);
        let items = lanes.lanes.iter().map(|l| (l.id.clone(), StoreItem::Lane(l.clone()))).collect();
        ops.push(Op::Replace(Group::LanesOf(e.clone()), items));
        edge_states.push((e.clone(), Some(edge_state(topo, e, settings)?)));
    }
    if opts.fail_at == Some(Stage::Plan) {
        return Err(EngineError::InjectedFailure(Stage::Plan));
    }
    for n in &v1 {
        let surface = p.intersection(n);
        match &surface {
            Some(s) => ops.push(Op::Upsert(n.to_string(), StoreItem::Intersection((**s).clone()))),
            None => ops.push(Op::Delete(ItemKind::Intersection, n.to_string())),
        }
        let mut layouts = Vec::new();
        for e in topo.node_edges.get(n).into_iter().flatten() {
            let edge = &topo.edges[e];
            if edge.start == edge.end {
                continue;
            }
            layouts.push((p.lanes(e), edge.start == *n));
        }
        let incident: Vec<IncidentLane<'_>> = layouts
            .iter()
            .flat_map(|(l, starts)| l.lanes.iter().map(move |lane| IncidentLane { lane, edge_starts_here: *starts }))
            .collect();
        let items = if topo.degree(n) >= 2 {
            let (ics, d) = generate_interconnections(n, topo.nodes[n].position, &incident, surface.as_ref().map(|s| &s.polygon), settings);
            p.diags.extend(d);
            ics.into_iter().map(|i| (i.id.clone(), StoreItem::Interconnection(i))).collect()
        } else {
            Vec::new()
        };
        ops.push(Op::Replace(Group::InterconnectionsAt(n.clone()), items));
    }
    for f in &faces {
        if let Some(b) = p.block(f) {
            ops.push(Op::Upsert(f.to_string(), StoreItem::Block(b)));
        }
    }
    for (id, def) in store.object_defs() {
        let obj = def.object();
        let host = obj.host_edge();
        let due = host.is_none_or(|h| e1.contains(h)) || store.get(ItemKind::Object, id).is_none();
        if !due {
            continue;
        }
        let placed = (|| -> Result<PlacedObject, String> {
            let axis = match host {
                Some(h) => Some(&topo.edge(h).map_err(|e| e.to_string())?.geometry),
                None => None,
            };
            let section = host.and_then(|h| p.cut(h)).and_then(|c| c.section.clone());
            let (point, angle) = place_object(obj, axis, section.as_ref().map(|s| &s.polygon)).map_err(|e| e.to_string())?;
            let surface = match def {
                ObjectDef::Crossing(pc) => {
                    let (axis, section) = axis.zip(section).ok_or("crossing host has no section")?;
                    Some(crossing_surface(pc, axis, &section).map_err(|e| e.to_string())?)
                }
                ObjectDef::Plain(_) => None,
            };
            Ok(PlacedObject { id: id.clone(), kind: obj.kind.clone(), host: host.cloned(), point, angle, surface })
        })();
        match placed {
            Ok(o) => ops.push(Op::Upsert(id.clone(), StoreItem::Object(o))),
            Err(e) => {
                p.diag(id, format!("object not placed: {e}"));
                ops.push(Op::Delete(ItemKind::Object, id.clone()));
            }
        }
    }
    if opts.roundabouts {
        let items = detect_roundabouts(topo, settings)
            .into_iter()
            .map(|r| (r.id.clone(), StoreItem::Roundabout(r)))
            .collect();
        ops.push(Op::Replace(Group::Roundabouts, items));
    }

    let mut violations = Vec::new();
    for op in &ops {
        match op {
            Op::Upsert(_, item) => check_item(item, topo, &mut violations),
            Op::Replace(_, items) => items.iter().for_each(|(_, i)| check_item(i, topo, &mut violations)),
            Op::Delete(..) => {}
        }
    }
    if !violations.is_empty() {
        return Err(EngineError::InvariantViolation(violations));
    }
    let current = settings_hash(settings);
    let settings_hash = if covers_topology(store, topo, &e1, settings)? {
        (store.settings_hash != current).then_some(current)
    } else if store.settings_hash != current {
        // mixed results: force the next sync to rebuild everything
        Some(String::new())
    } else {
        None
    };
    Ok(ChangeSet { ops, edge_states, settings_hash, diagnostics: p.diags.into_iter().collect(), junction_solves: p.solves })
}

/// Whether every topology edge has results generated from its current
/// inputs once `e1` is regenerated.
fn covers_topology(store: &StreetModelStore, topo: &Topology, e1: &BTreeSet<EdgeId>, settings: &Settings) -> Result<bool, EngineError> {
    let states = store.edge_states();
    let rest = || topo.edges.keys().filter(|e| !e1.contains(*e));
    if !rest().all(|e| states.contains_key(e)) {
        return Ok(false);
    }
    for e in rest() {
        if states[e].hash != edge_state(topo, e, settings)?.hash {
            return Ok(false);
        }
    }
    Ok(true)
}
