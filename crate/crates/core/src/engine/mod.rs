//! Set based generation into a versioned store with upsert semantics,
//! per-axis semaphores for concurrent workers and k-means partitioning.

mod partition;
mod plan;
mod semaphore;
mod validate;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::geom::{Point2, Polygon};
use crate::network::{build_topology, AxisId, EdgeId, FaceId, NetworkError, NodeId, Topology};
use crate::objects::{PedestrianCrossing, StreetObject};
use crate::settings::Settings;
use crate::surface::{CityBlock, IntersectionSurface, SectionSurface};
use crate::traffic::{Interconnection, Lane, RoundaboutCandidate};
use crate::Diagnostic;

pub use partition::{axis_centroid, kmeans, partition_axes};
pub use plan::{plan, ChangeSet};
pub use semaphore::{run_workers, SemaphoreLedger, WorkerStats};
pub use validate::validate_store;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("not found: {0}")]
    NotFound(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("model invariant violated, change set discarded ({} problems)", .0.len())]
    InvariantViolation(Vec<Diagnostic>),
    #[error("injected failure at stage {0:?}")]
    InjectedFailure(Stage),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl From<NetworkError> for EngineError {
    fn from(e: NetworkError) -> Self {
        match e {
            NetworkError::NotFound(s) => EngineError::NotFound(s),
            NetworkError::InvalidParameter(s) => EngineError::InvalidParameter(s),
        }
    }
}

/// Pipeline stage at which a failure can be injected for testing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Plan,
    Apply,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenerateOptions {
    pub roundabouts: bool,
    pub fail_at: Option<Stage>,
}

impl Default for GenerateOptions {
    fn default() -> Self {
        GenerateOptions { roundabouts: true, fail_at: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ItemKind {
    Section,
    Intersection,
    Block,
    Lane,
    Interconnection,
    Roundabout,
    Object,
}

impl ItemKind {
    pub const ALL: [ItemKind; 7] = [
        ItemKind::Section,
        ItemKind::Intersection,
        ItemKind::Block,
        ItemKind::Lane,
        ItemKind::Interconnection,
        ItemKind::Roundabout,
        ItemKind::Object,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ItemKind::Section => "section",
            ItemKind::Intersection => "intersection",
            ItemKind::Block => "block",
            ItemKind::Lane => "lane",
            ItemKind::Interconnection => "interconnection",
            ItemKind::Roundabout => "roundabout",
            ItemKind::Object => "object",
        }
    }
}

/// Resolved pose of a street object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacedObject {
    pub id: String,
    pub kind: String,
    pub host: Option<EdgeId>,
    pub point: Point2,
    pub angle: f64,
    pub surface: Option<Polygon>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "data")]
pub enum StoreItem {
    Section(SectionSurface),
    Intersection(IntersectionSurface),
    Block(CityBlock),
    Lane(Lane),
    Interconnection(Interconnection),
    Roundabout(RoundaboutCandidate),
    Object(PlacedObject),
}

impl StoreItem {
    pub fn kind(&self) -> ItemKind {
        match self {
            StoreItem::Section(_) => ItemKind::Section,
            StoreItem::Intersection(_) => ItemKind::Intersection,
            StoreItem::Block(_) => ItemKind::Block,
            StoreItem::Lane(_) => ItemKind::Lane,
            StoreItem::Interconnection(_) => ItemKind::Interconnection,
            StoreItem::Roundabout(_) => ItemKind::Roundabout,
            StoreItem::Object(_) => ItemKind::Object,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Versioned {
    pub version: u64,
    pub hash: String,
    pub item: StoreItem,
}

/// Object definitions kept in the store; their poses are derived.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ObjectDef {
    Plain(StreetObject),
    Crossing(PedestrianCrossing),
}

impl ObjectDef {
    pub fn object(&self) -> &StreetObject {
        match self {
            ObjectDef::Plain(o) => o,
            ObjectDef::Crossing(c) => &c.object,
        }
    }
}

/// Fingerprint of the inputs an edge's results were computed from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeState {
    pub hash: String,
    pub start: NodeId,
    pub end: NodeId,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn content_hash<T: Serialize>(value: &T) -> String {
    sha256_hex(&serde_json::to_vec(value).expect("model items serialize"))
}

pub fn settings_hash(settings: &Settings) -> String {
    content_hash(settings)
}

/// The hash covers the edge, its axis and the settings it was generated with.
pub(crate) fn edge_state(topo: &Topology, edge: &EdgeId, settings: &Settings) -> Result<EdgeState, EngineError> {
    let e = topo.edge(edge)?;
    let axis = topo.axis_of(edge)?;
    Ok(EdgeState { hash: content_hash(&(e, axis, settings_hash(settings))), start: e.start.clone(), end: e.end.clone() })
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ItemRef {
    pub kind: ItemKind,
    pub key: String,
}

impl fmt::Display for ItemRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind.name(), self.key)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ChangeReport {
    pub inserted: Vec<ItemRef>,
    pub updated: Vec<ItemRef>,
    pub deleted: Vec<ItemRef>,
    pub diagnostics: Vec<Diagnostic>,
    /// Junction solutions computed while planning.
    pub junction_solves: usize,
}

impl ChangeReport {
    /// No item was inserted, updated or deleted.
    pub fn is_empty(&self) -> bool {
        self.inserted.is_empty() && self.updated.is_empty() && self.deleted.is_empty()
    }

    pub fn merge(&mut self, o: ChangeReport) {
        self.inserted.extend(o.inserted);
        self.updated.extend(o.updated);
        self.deleted.extend(o.deleted);
        self.diagnostics.extend(o.diagnostics);
        self.junction_solves += o.junction_solves;
    }
}

/// Items grouped so a regeneration can replace the whole group.
#[derive(Debug, Clone, PartialEq)]
pub enum Group {
    LanesOf(EdgeId),
    InterconnectionsAt(NodeId),
    Roundabouts,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Op {
    Upsert(String, StoreItem),
    Delete(ItemKind, String),
    Replace(Group, Vec<(String, StoreItem)>),
}

enum Undo {
    Item(ItemKind, String, Option<Versioned>),
    Edge(EdgeId, Option<EdgeState>),
    Settings(String),
}

/// Generated street model keyed by topology ids, with per-item versions.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StreetModelStore {
    items: BTreeMap<ItemKind, BTreeMap<String, Versioned>>,
    objects: BTreeMap<String, ObjectDef>,
    edge_states: BTreeMap<EdgeId, EdgeState>,
    settings_hash: String,
}

impl StreetModelStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, kind: ItemKind, key: &str) -> Option<&Versioned> {
        self.items.get(&kind)?.get(key)
    }

    pub fn iter(&self, kind: ItemKind) -> impl Iterator<Item = (&String, &Versioned)> {
        self.items.get(&kind).into_iter().flatten()
    }

    pub fn len(&self, kind: ItemKind) -> usize {
        self.items.get(&kind).map_or(0, BTreeMap::len)
    }

    pub fn is_empty(&self) -> bool {
        self.items.values().all(BTreeMap::is_empty)
    }

    pub fn section(&self, e: &EdgeId) -> Option<&SectionSurface> {
        match &self.get(ItemKind::Section, e.as_str())?.item {
            StoreItem::Section(s) => Some(s),
            _ => None,
        }
    }

    pub fn intersection(&self, n: &NodeId) -> Option<&IntersectionSurface> {
        match &self.get(ItemKind::Intersection, n.as_str())?.item {
            StoreItem::Intersection(s) => Some(s),
            _ => None,
        }
    }

    pub fn block(&self, f: &FaceId) -> Option<&CityBlock> {
        match &self.get(ItemKind::Block, f.as_str())?.item {
            StoreItem::Block(b) => Some(b),
            _ => None,
        }
    }

    pub fn sections(&self) -> impl Iterator<Item = &SectionSurface> {
        self.iter(ItemKind::Section).filter_map(|(_, v)| match &v.item {
            StoreItem::Section(s) => Some(s),
            _ => None,
        })
    }

    pub fn intersections(&self) -> impl Iterator<Item = &IntersectionSurface> {
        self.iter(ItemKind::Intersection).filter_map(|(_, v)| match &v.item {
            StoreItem::Intersection(s) => Some(s),
            _ => None,
        })
    }

    pub fn blocks(&self) -> impl Iterator<Item = &CityBlock> {
        self.iter(ItemKind::Block).filter_map(|(_, v)| match &v.item {
            StoreItem::Block(b) => Some(b),
            _ => None,
        })
    }

    pub fn lanes(&self) -> impl Iterator<Item = &Lane> {
        self.iter(ItemKind::Lane).filter_map(|(_, v)| match &v.item {
            StoreItem::Lane(l) => Some(l),
            _ => None,
        })
    }

    pub fn interconnections(&self) -> impl Iterator<Item = &Interconnection> {
        self.iter(ItemKind::Interconnection).filter_map(|(_, v)| match &v.item {
            StoreItem::Interconnection(l) => Some(l),
            _ => None,
        })
    }

    pub fn roundabouts(&self) -> impl Iterator<Item = &RoundaboutCandidate> {
        self.iter(ItemKind::Roundabout).filter_map(|(_, v)| match &v.item {
            StoreItem::Roundabout(r) => Some(r),
            _ => None,
        })
    }

    pub fn placed_objects(&self) -> impl Iterator<Item = &PlacedObject> {
        self.iter(ItemKind::Object).filter_map(|(_, v)| match &v.item {
            StoreItem::Object(o) => Some(o),
            _ => None,
        })
    }

    pub fn lanes_of<'a>(&'a self, e: &'a EdgeId) -> impl Iterator<Item = &'a Lane> + 'a {
        self.group_keys(&Group::LanesOf(e.clone())).into_iter().filter_map(move |k| match &self.get(ItemKind::Lane, &k)?.item {
            StoreItem::Lane(l) => Some(l),
            _ => None,
        })
    }

    pub fn object_defs(&self) -> &BTreeMap<String, ObjectDef> {
        &self.objects
    }

    /// Register an object; its pose is computed by the next generation.
    pub fn add_object(&mut self, def: ObjectDef) {
        self.objects.insert(def.object().id.clone(), def);
    }

    pub fn edge_states(&self) -> &BTreeMap<EdgeId, EdgeState> {
        &self.edge_states
    }

    /// Hash over the whole store content, versions included.
    pub fn fingerprint(&self) -> String {
        content_hash(self)
    }

    pub fn save(&self, path: &Path) -> Result<(), EngineError> {
        std::fs::write(path, serde_json::to_vec(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, EngineError> {
        Ok(serde_json::from_slice(&std::fs::read(path)?)?)
    }

    fn group_keys(&self, g: &Group) -> Vec<String> {
        let (kind, prefix) = match g {
            Group::LanesOf(e) => (ItemKind::Lane, format!("{e}/")),
            Group::InterconnectionsAt(n) => (ItemKind::Interconnection, format!("{n}:")),
            Group::Roundabouts => (ItemKind::Roundabout, String::new()),
        };
        let Some(map) = self.items.get(&kind) else { return Vec::new() };
        map.range(prefix.clone()..)
            .take_while(|(k, _)| k.starts_with(&prefix))
            .filter(|(_, v)| match (&v.item, g) {
                (StoreItem::Lane(l), Group::LanesOf(e)) => l.edge == *e,
                (StoreItem::Interconnection(i), Group::InterconnectionsAt(n)) => i.node == *n,
                (StoreItem::Roundabout(_), Group::Roundabouts) => true,
                _ => false,
            })
            .map(|(k, _)| k.clone())
            .collect()
    }

    fn raw_delete(&mut self, kind: ItemKind, key: &str, undo: &mut Vec<Undo>, report: &mut ChangeReport) {
        if let Some(old) = self.items.get_mut(&kind).and_then(|m| m.remove(key)) {
            undo.push(Undo::Item(kind, key.to_string(), Some(old)));
            report.deleted.push(ItemRef { kind, key: key.to_string() });
        }
    }

    fn raw_upsert(&mut self, key: String, item: StoreItem, undo: &mut Vec<Undo>, report: &mut ChangeReport) {
        let kind = item.kind();
        let hash = content_hash(&item);
        let map = self.items.entry(kind).or_default();
        match map.get_mut(&key) {
            Some(v) if v.hash == hash => {}
            Some(v) => {
                let old = std::mem::replace(v, Versioned { version: v.version + 1, hash, item });
                undo.push(Undo::Item(kind, key.clone(), Some(old)));
                report.updated.push(ItemRef { kind, key });
            }
            None => {
                map.insert(key.clone(), Versioned { version: 1, hash, item });
                undo.push(Undo::Item(kind, key.clone(), None));
                report.inserted.push(ItemRef { kind, key });
            }
        }
    }

    fn rollback(&mut self, undo: Vec<Undo>) {
        for u in undo.into_iter().rev() {
            match u {
                Undo::Item(kind, key, Some(old)) => {
                    self.items.entry(kind).or_default().insert(key, old);
                }
                Undo::Item(kind, key, None) => {
                    if let Some(m) = self.items.get_mut(&kind) {
                        m.remove(&key);
                    }
                }
                Undo::Edge(e, Some(s)) => {
                    self.edge_states.insert(e, s);
                }
                Undo::Edge(e, None) => {
                    self.edge_states.remove(&e);
                }
                Undo::Settings(h) => self.settings_hash = h,
            }
        }
        self.items.retain(|_, m| !m.is_empty());
    }

    /// Apply a change set all-or-nothing. With `fail_at == Some(Apply)` the
    /// application stops half way and is rolled back.
    pub fn apply(&mut self, cs: ChangeSet, fail_at: Option<Stage>) -> Result<ChangeReport, EngineError> {
        let mut report = ChangeReport {
            diagnostics: cs.diagnostics,
            junction_solves: cs.junction_solves,
            ..ChangeReport::default()
        };
        let mut undo = Vec::new();
        let fail_step = (fail_at == Some(Stage::Apply)).then_some(cs.ops.len() / 2);
        for (step, op) in cs.ops.into_iter().enumerate() {
            if fail_step == Some(step) {
                self.rollback(undo);
                return Err(EngineError::InjectedFailure(Stage::Apply));
            }
            match op {
                Op::Upsert(key, item) => self.raw_upsert(key, item, &mut undo, &mut report),
                Op::Delete(kind, key) => self.raw_delete(kind, &key, &mut undo, &mut report),
                Op::Replace(group, items) => {
                    let keep: BTreeSet<&String> = items.iter().map(|(k, _)| k).collect();
                    let kind = match group {
                        Group::LanesOf(_) => ItemKind::Lane,
                        Group::InterconnectionsAt(_) => ItemKind::Interconnection,
                        Group::Roundabouts => ItemKind::Roundabout,
                    };
                    for k in self.group_keys(&group) {
                        if !keep.contains(&k) {
                            self.raw_delete(kind, &k, &mut undo, &mut report);
                        }
                    }
                    for (k, item) in items {
                        self.raw_upsert(k, item, &mut undo, &mut report);
                    }
                }
            }
        }
        if fail_step.is_some() {
            // empty change set: fail before touching anything
            self.rollback(undo);
            return Err(EngineError::InjectedFailure(Stage::Apply));
        }
        for (e, st) in cs.edge_states {
            let old = match st {
                Some(s) => self.edge_states.insert(e.clone(), s),
                None => self.edge_states.remove(&e),
            };
            undo.push(Undo::Edge(e, old));
        }
        if let Some(h) = cs.settings_hash {
            undo.push(Undo::Settings(std::mem::replace(&mut self.settings_hash, h)));
        }
        self.items.retain(|_, m| !m.is_empty());
        report.inserted.sort();
        report.updated.sort();
        report.deleted.sort();
        Ok(report)
    }
}

/// Generate every result depending on `scope` and apply it atomically.
pub fn generate(
    store: &mut StreetModelStore,
    topo: &Topology,
    scope: &BTreeSet<EdgeId>,
    settings: &Settings,
    opts: GenerateOptions,
) -> Result<ChangeReport, EngineError> {
    let cs = plan(store, topo, scope, settings, opts)?;
    store.apply(cs, opts.fail_at)
}

/// Stale items (ids no longer in the topology) and the edges to regenerate
/// because their inputs changed since the store was last synchronized.
fn sync_scope(store: &StreetModelStore, topo: &Topology, settings: &Settings) -> Result<(BTreeSet<EdgeId>, Vec<Op>, Vec<(EdgeId, Option<EdgeState>)>), EngineError> {
    let full = store.settings_hash != settings_hash(settings);
    let mut scope = BTreeSet::new();
    for e in topo.edges.keys() {
        if full || store.edge_states.get(e).map(|s| &s.hash) != Some(&edge_state(topo, e, settings)?.hash) {
            scope.insert(e.clone());
        }
    }
    let mut gone = Vec::new();
    for (e, st) in &store.edge_states {
        if !topo.edges.contains_key(e) {
            gone.push((e.clone(), None));
            for n in [&st.start, &st.end] {
                scope.extend(topo.node_edges.get(n).into_iter().flatten().cloned());
            }
        }
    }
    let mut ops = Vec::new();
    for (kind, map) in &store.items {
        for (key, v) in map {
            let live = match &v.item {
                StoreItem::Section(s) => topo.edges.contains_key(&s.edge),
                StoreItem::Intersection(s) => topo.nodes.contains_key(&s.node) && topo.degree(&s.node) >= 2,
                StoreItem::Block(b) => topo.faces.get(&b.face).is_some_and(|f| !f.universal),
                StoreItem::Lane(l) => topo.edges.contains_key(&l.edge),
                StoreItem::Interconnection(i) => topo.nodes.contains_key(&i.node),
                StoreItem::Roundabout(_) => true,
                StoreItem::Object(o) => {
                    store.objects.contains_key(&o.id) && o.host.as_ref().is_none_or(|h| topo.edges.contains_key(h))
                }
            };
            if !live {
                ops.push(Op::Delete(*kind, key.clone()));
            }
        }
    }
    Ok((scope, ops, gone))
}

/// Bring the store in line with a (possibly edited) topology: stale items
/// are removed and only edges whose inputs changed are regenerated.
pub fn sync(
    store: &mut StreetModelStore,
    topo: &Topology,
    settings: &Settings,
    opts: GenerateOptions,
) -> Result<ChangeReport, EngineError> {
    let (scope, purge, gone) = sync_scope(store, topo, settings)?;
    let mut cs = if scope.is_empty() {
        ChangeSet::default()
    } else {
        plan(store, topo, &scope, settings, opts)?
    };
    if scope.is_empty() && opts.fail_at == Some(Stage::Plan) {
        return Err(EngineError::InjectedFailure(Stage::Plan));
    }
    let mut ops = purge;
    ops.append(&mut cs.ops);
    cs.ops = ops;
    cs.edge_states.extend(gone);
    if scope.is_empty() && store.settings_hash != settings_hash(settings) {
        cs.settings_hash = Some(settings_hash(settings));
    }
    store.apply(cs, opts.fail_at)
}

/// Full build of every edge into the store.
pub fn build(
    store: &mut StreetModelStore,
    topo: &Topology,
    settings: &Settings,
    opts: GenerateOptions,
) -> Result<ChangeReport, EngineError> {
    let all: BTreeSet<EdgeId> = topo.edges.keys().cloned().collect();
    let (_, purge, gone) = sync_scope(store, topo, settings)?;
    let mut cs = plan(store, topo, &all, settings, opts)?;
    let mut ops = purge;
    ops.append(&mut cs.ops);
    cs.ops = ops;
    cs.edge_states.extend(gone);
    store.apply(cs, opts.fail_at)
}

/// Remove an axis (given by its id or the id of one of its edges): the
/// topology is rebuilt without it, dependents are deleted and the
/// neighboring junctions re-solved.
pub fn delete_axis(
    store: &mut StreetModelStore,
    topo: &Topology,
    id: &str,
    settings: &Settings,
) -> Result<(Topology, ChangeReport), EngineError> {
    let axis = if topo.axes.contains_key(&AxisId::from(id)) {
        AxisId::from(id)
    } else {
        topo.edges.get(&EdgeId::from(id)).map(|e| e.axis.clone()).ok_or_else(|| EngineError::NotFound(id.to_string()))?
    };
    let axes: Vec<_> = topo.axes.values().filter(|a| a.id != axis).cloned().collect();
    let next = build_topology(&axes, topo.snap_tol)?;
    let report = sync(store, &next, settings, GenerateOptions::default())?;
    Ok((next, report))
}
