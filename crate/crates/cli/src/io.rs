//! GeoJSON road networks in, GeoJSON layers and traffic XML out.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use geojson::{Feature, FeatureCollection, GeoJson, GeometryValue, JsonObject, Position};
use quick_xml::Writer;
use serde_json::{json, Value};
use thiserror::Error;

use streetgen::engine::StreetModelStore;
use streetgen::geom::{Point2, Polygon, Polyline};
use streetgen::traffic::lane_groups;
use streetgen::{Diagnostic, Direction, EdgeId, Importance, NodeId, RoadAxis, Settings};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {reason}")]
    Parse { path: String, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("edge {0} has a section but no lanes")]
    MissingLanes(EdgeId),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DataError + '_ {
    move |source| DataError::Io { path: path.display().to_string(), source }
}

/// Axes read from a network file, with what had to be patched or dropped.
#[derive(Debug, Clone, Default)]
pub struct LoadedNetwork {
    pub axes: Vec<RoadAxis>,
    /// Features completed with default attributes.
    pub warnings: Vec<Diagnostic>,
    /// Features that could not be used at all.
    pub rejected: Vec<Diagnostic>,
}

fn feature_id(f: &Feature, index: usize) -> String {
    match &f.id {
        Some(geojson::feature::Id::String(s)) => s.clone(),
        Some(geojson::feature::Id::Number(n)) => n.to_string(),
        None => match f.property("id") {
            Some(Value::String(s)) => s.clone(),
            Some(Value::Number(n)) => n.to_string(),
            _ => format!("feature{index}"),
        },
    }
}

fn attr<'a>(props: Option<&'a JsonObject>, key: &str) -> Option<&'a Value> {
    props.and_then(|p| p.get(key)).filter(|v| !v.is_null())
}

fn number(v: &Value, key: &str) -> Result<f64, String> {
    v.as_f64().ok_or_else(|| format!("`{key}` must be a number, got {v}"))
}

fn text<'a>(v: &'a Value, key: &str) -> Result<&'a str, String> {
    v.as_str().ok_or_else(|| format!("`{key}` must be a string, got {v}"))
}

fn axis_from_feature(id: &str, f: &Feature, settings: &Settings, missing: &mut Vec<&'static str>) -> Result<RoadAxis, String> {
    let coords = match f.geometry.as_ref().map(|g| &g.value) {
        Some(GeometryValue::LineString { coordinates }) => coordinates,
        Some(other) => return Err(format!("{} geometry is not a road axis, feature skipped", other.type_name())),
        None => return Err("feature has no geometry".into()),
    };
    let mut pts = Vec::with_capacity(coords.len());
    for c in coords {
        if c.len() < 2 {
            return Err("position with fewer than two coordinates".into());
        }
        pts.push(Point2::new(c[0], c[1]));
    }
    let line = Polyline::new(pts).map_err(|e| e.to_string())?;
    let props = f.properties.as_ref();
    let width = match attr(props, "width") {
        Some(v) => number(v, "width")?,
        None => {
            missing.push("width");
            settings.default_width
        }
    };
    let mut axis = RoadAxis::new(id, line, width / 2.0);
    axis.importance = match attr(props, "importance") {
        Some(v) => Importance::from_str(text(v, "importance")?)?,
        None => {
            missing.push("importance");
            settings.default_importance
        }
    };
    axis.avg_speed = match attr(props, "speed") {
        Some(v) => number(v, "speed")?,
        None => {
            missing.push("speed");
            settings.default_speed
        }
    };
    axis.lane_count = match attr(props, "lanes") {
        Some(v) => v
            .as_u64()
            .and_then(|n| u32::try_from(n).ok())
            .ok_or_else(|| format!("`lanes` must be a non-negative integer, got {v}"))?,
        None => {
            missing.push("lanes");
            settings.default_lanes
        }
    };
    axis.direction = match attr(props, "direction") {
        Some(v) => Direction::from_str(text(v, "direction")?)?,
        None => {
            missing.push("direction");
            settings.default_direction
        }
    };
    if let Some(v) = attr(props, "name") {
        axis.name = text(v, "name")?.to_string();
    }
    Ok(axis)
}

/// Parse a network held in memory; `origin` names it in error messages.
pub fn parse_network(text: &str, origin: &str, settings: &Settings) -> Result<LoadedNetwork, DataError> {
    let parse = |reason: String| DataError::Parse { path: origin.to_string(), reason };
    let doc: Value = serde_json::from_str(text).map_err(|e| parse(e.to_string()))?;
    if doc.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(parse("top level object must be a FeatureCollection".into()));
    }
    let features = doc.get("features").and_then(Value::as_array).ok_or_else(|| parse("missing `features` array".into()))?;
    let mut out = LoadedNetwork::default();
    for (i, raw) in features.iter().enumerate() {
        let f: Feature = serde_json::from_value(raw.clone()).map_err(|e| parse(format!("feature {i}: {e}")))?;
        let id = feature_id(&f, i);
        let mut missing = Vec::new();
        match axis_from_feature(&id, &f, settings, &mut missing) {
            Ok(axis) => {
                if !missing.is_empty() {
                    out.warnings.push(Diagnostic::new(&id, format!("defaults used for {}", missing.join(", "))));
                }
                out.axes.push(axis);
            }
            Err(reason) => out.rejected.push(Diagnostic::new(&id, reason)),
        }
    }
    Ok(out)
}

/// Read a GeoJSON FeatureCollection of LineString road axes. `width` is the
/// full roadway width; absent attributes fall back to the settings defaults.
pub fn load_network(path: &Path, settings: &Settings) -> Result<LoadedNetwork, DataError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_network(&text, &path.display().to_string(), settings)
}

fn r3(v: f64) -> f64 {
    // adding zero folds -0.0 into 0.0
    (v * 1000.0).round() / 1000.0 + 0.0
}

fn pos(p: Point2) -> Position {
    Position::from([r3(p.x), r3(p.y)])
}

fn line_coords(pts: &[Point2]) -> Vec<Position> {
    pts.iter().map(|p| pos(*p)).collect()
}

fn polygon_coords(poly: &Polygon) -> Vec<Vec<Position>> {
    poly.rings().map(line_coords).collect()
}

fn feature(id: &str, geometry: GeometryValue, props: Value) -> Feature {
    let mut properties = match props {
        Value::Object(m) => m,
        _ => JsonObject::new(),
    };
    properties.insert("id".into(), Value::String(id.to_string()));
    Feature {
        id: Some(geojson::feature::Id::String(id.to_string())),
        geometry: Some(geojson::Geometry::new(geometry)),
        properties: Some(properties),
        ..Feature::default()
    }
}

fn collection(features: Vec<Feature>) -> String {
    let mut crs = JsonObject::new();
    crs.insert("crs".into(), json!({ "type": "name", "properties": { "name": "local-meters" } }));
    let fc = FeatureCollection { bbox: None, features, foreign_members: Some(crs) };
    let mut s = GeoJson::from(fc).to_string();
    s.push('\n');
    s
}

/// Write axes in the format `load_network` reads.
pub fn write_network(axes: &[RoadAxis], path: &Path) -> Result<(), DataError> {
    let features = axes
        .iter()
        .map(|a| {
            let props = json!({
                "width": a.half_width * 2.0,
                "importance": a.importance.to_string(),
                "speed": a.avg_speed,
                "lanes": a.lane_count,
                "direction": a.direction.to_string(),
                "name": a.name,
            });
            let coords = a.geometry.vertices().iter().map(|p| Position::from([p.x, p.y])).collect();
            feature(a.id.as_str(), GeometryValue::LineString { coordinates: coords }, props)
        })
        .collect();
    fs::write(path, collection(features)).map_err(io_err(path))
}

/// Exportable GeoJSON layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Layer {
    Sections,
    Intersections,
    Blocks,
    Lanes,
    Interconnections,
    Objects,
    Roundabouts,
}

impl Layer {
    pub const ALL: [Layer; 7] = [
        Layer::Sections,
        Layer::Intersections,
        Layer::Blocks,
        Layer::Lanes,
        Layer::Interconnections,
        Layer::Objects,
        Layer::Roundabouts,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Layer::Sections => "sections",
            Layer::Intersections => "intersections",
            Layer::Blocks => "blocks",
            Layer::Lanes => "lanes",
            Layer::Interconnections => "interconnections",
            Layer::Objects => "objects",
            Layer::Roundabouts => "roundabouts",
        }
    }
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Layer {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Layer::ALL
            .into_iter()
            .find(|l| l.name() == s.trim())
            .ok_or_else(|| format!("unknown layer `{s}`, expected one of sections, intersections, blocks, lanes, interconnections, objects, roundabouts"))
    }
}

/// One layer as a GeoJSON FeatureCollection string.
pub fn layer_geojson(store: &StreetModelStore, layer: Layer) -> String {
    let features: Vec<Feature> = match layer {
        Layer::Sections => store
            .sections()
            .map(|s| {
                let props = json!({ "edge": s.edge.as_str(), "s_start": r3(s.s_start), "s_end": r3(s.s_end) });
                feature(s.edge.as_str(), GeometryValue::Polygon { coordinates: polygon_coords(&s.polygon) }, props)
            })
            .collect(),
        Layer::Intersections => store
            .intersections()
            .map(|s| {
                let props = json!({ "node": s.node.as_str(), "arcs": s.arcs.len() });
                feature(s.node.as_str(), GeometryValue::Polygon { coordinates: polygon_coords(&s.polygon) }, props)
            })
            .collect(),
        Layer::Blocks => store
            .blocks()
            .map(|b| {
                let props = json!({ "face": b.face.as_str(), "area": r3(b.area()) });
                let coords = b.parts.iter().map(polygon_coords).collect();
                feature(b.face.as_str(), GeometryValue::MultiPolygon { coordinates: coords }, props)
            })
            .collect(),
        Layer::Lanes => store
            .lanes()
            .map(|l| {
                let props = json!({
                    "edge": l.edge.as_str(),
                    "index": l.index,
                    "side": if l.side == streetgen::traffic::Side::Right { "right" } else { "left" },
                    "offset": r3(l.offset),
                    "direction": if l.direction_matches_axis { "fwd" } else { "rev" },
                });
                feature(&l.id, GeometryValue::LineString { coordinates: line_coords(l.geometry.vertices()) }, props)
            })
            .collect(),
        Layer::Interconnections => store
            .interconnections()
            .map(|ic| {
                let props = json!({ "node": ic.node.as_str(), "from": ic.from, "to": ic.to });
                feature(&ic.id, GeometryValue::LineString { coordinates: line_coords(ic.trajectory.vertices()) }, props)
            })
            .collect(),
        Layer::Objects => store
            .placed_objects()
            .map(|o| {
                let props = json!({
                    "kind": o.kind,
                    "host": o.host.as_ref().map(|h| h.as_str()),
                    "angle": r3(o.angle),
                    "x": r3(o.point.x),
                    "y": r3(o.point.y),
                });
                let geometry = match &o.surface {
                    Some(p) => GeometryValue::Polygon { coordinates: polygon_coords(p) },
                    None => GeometryValue::Point { coordinates: pos(o.point) },
                };
                feature(&o.id, geometry, props)
            })
            .collect(),
        Layer::Roundabouts => store
            .roundabouts()
            .map(|r| {
                let props = json!({
                    "face": r.face.as_ref().map(|f| f.as_str()),
                    "nodes": r.nodes.iter().map(|n| n.as_str()).collect::<Vec<_>>(),
                    "radius": r3(r.radius),
                    "score": r3(r.score),
                    "geometric": r3(r.evidence.geometric),
                    "same_name": r.evidence.same_name,
                    "keyword": r.evidence.keyword,
                });
                feature(&r.id, GeometryValue::Point { coordinates: pos(r.center) }, props)
            })
            .collect(),
    };
    collection(features)
}

/// Write `<dir>/<layer>.geojson` for each requested layer; returns the paths.
pub fn export_geojson(store: &StreetModelStore, dir: &Path, layers: &[Layer]) -> Result<Vec<PathBuf>, DataError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();
    for &layer in layers {
        let path = dir.join(format!("{layer}.geojson"));
        fs::write(&path, layer_geojson(store, layer)).map_err(io_err(&path))?;
        written.push(path);
    }
    Ok(written)
}

fn points_attr(pts: &[Point2]) -> String {
    pts.iter().map(|p| format!("{:.3},{:.3}", r3(p.x), r3(p.y))).collect::<Vec<_>>().join(" ")
}

/// The traffic network as `sgtraffic-v1` XML. Junctions belonging to a
/// roundabout scoring at least `threshold` are tagged `kind="roundabout"`.
pub fn traffic_xml(store: &StreetModelStore, threshold: f64) -> Result<String, DataError> {
    let ring_nodes: BTreeSet<&NodeId> =
        store.roundabouts().filter(|r| r.score >= threshold).flat_map(|r| r.nodes.iter()).collect();
    let mut by_node: BTreeMap<&NodeId, Vec<_>> = BTreeMap::new();
    for n in store.intersections().map(|s| &s.node) {
        by_node.entry(n).or_default();
    }
    for ic in store.interconnections() {
        by_node.entry(&ic.node).or_default().push(ic);
    }
    let mut sections = Vec::new();
    for s in store.sections() {
        let lanes: Vec<_> = store.lanes_of(&s.edge).cloned().collect();
        if lanes.is_empty() {
            return Err(DataError::MissingLanes(s.edge.clone()));
        }
        let by_id: BTreeMap<&str, _> = lanes.iter().map(|l| (l.id.as_str(), l)).collect();
        let groups: Vec<_> = lane_groups(&s.edge, &lanes)
            .into_iter()
            .map(|g| {
                let mut members: Vec<_> = g.lanes.iter().filter_map(|id| by_id.get(id.as_str()).copied().cloned()).collect();
                members.sort_by_key(|l| l.index);
                (if g.direction_matches_axis { "fwd" } else { "rev" }, members)
            })
            .collect();
        sections.push((s.edge.as_str(), groups));
    }

    let mut w = Writer::new_with_indent(Vec::new(), b' ', 2);
    let xml = |e: std::io::Error| DataError::Parse { path: "traffic xml".into(), reason: e.to_string() };
    w.create_element("network")
        .with_attribute(("schema", "sgtraffic-v1"))
        .write_inner_content(|w| {
            w.create_element("sections").write_inner_content(|w| {
                for (edge, groups) in &sections {
                    w.create_element("section").with_attribute(("id", *edge)).write_inner_content(|w| {
                        for (dir, members) in groups {
                            w.create_element("lanegroup").with_attribute(("dir", *dir)).write_inner_content(|w| {
                                for l in members {
                                    let pts = points_attr(l.geometry.vertices());
                                    w.create_element("lane")
                                        .with_attribute(("id", l.id.as_str()))
                                        .with_attribute(("points", pts.as_str()))
                                        .write_empty()?;
                                }
                                Ok(())
                            })?;
                        }
                        Ok(())
                    })?;
                }
                Ok(())
            })?;
            w.create_element("intersections").write_inner_content(|w| {
                for (node, ics) in &by_node {
                    let kind = if ring_nodes.contains(node) { "roundabout" } else { "plain" };
                    w.create_element("intersection")
                        .with_attribute(("id", node.as_str()))
                        .with_attribute(("kind", kind))
                        .write_inner_content(|w| {
                            for ic in ics {
                                let pts = points_attr(ic.trajectory.vertices());
                                w.create_element("interconnection")
                                    .with_attribute(("from", ic.from.as_str()))
                                    .with_attribute(("to", ic.to.as_str()))
                                    .with_attribute(("points", pts.as_str()))
                                    .write_empty()?;
                            }
                            Ok(())
                        })?;
                }
                Ok(())
            })?;
            Ok(())
        })
        .map_err(xml)?;
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str(&String::from_utf8(w.into_inner()).expect("writer emits utf-8"));
    out.push('\n');
    Ok(out)
}

pub fn export_traffic_xml(store: &StreetModelStore, settings: &Settings, path: &Path) -> Result<(), DataError> {
    let text = traffic_xml(store, settings.roundabout_score_threshold)?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(path, text).map_err(io_err(path))
}
