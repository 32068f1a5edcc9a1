//! Street objects placed in absolute coordinates or relative to a road.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{intersection, interpolate, Point2, Polygon, Polyline};
use crate::network::EdgeId;
use crate::surface::SectionSurface;

#[derive(Debug, Error)]
pub enum ObjectError {
    #[error("invalid object {id}: {reason}")]
    InvalidObject { id: String, reason: String },
    #[error("crossing {id} leaves its section surface: {reason}")]
    CrossingOutOfSurface { id: String, reason: String },
    #[error("catalog line {line}: {reason}")]
    Catalog { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Where an object sits. Relative modes are anchored on a host edge at
/// curvilinear abscissa `s` with a signed offset, positive to the left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode")]
pub enum Position {
    Absolute { point: Point2 },
    AxisRelative { edge: EdgeId, s: f64, lateral_offset: f64 },
    SidewalkRelative { edge: EdgeId, s: f64, lateral_offset: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OrientationMode {
    Absolute,
    AxisRelative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreetObject {
    pub id: String,
    pub kind: String,
    pub position: Position,
    pub orientation: OrientationMode,
    pub angle: f64,
}

impl StreetObject {
    pub fn host_edge(&self) -> Option<&EdgeId> {
        match &self.position {
            Position::Absolute { .. } => None,
            Position::AxisRelative { edge, .. } | Position::SidewalkRelative { edge, .. } => Some(edge),
        }
    }

    fn invalid(&self, reason: impl Into<String>) -> ObjectError {
        ObjectError::InvalidObject { id: self.id.clone(), reason: reason.into() }
    }
}

pub const CROSSING_KIND: &str = "pedestrian_crossing";
pub const MIN_CROSSING_WIDTH: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PedestrianCrossing {
    pub object: StreetObject,
    /// Width of the striped band, measured across the stripes.
    pub width: f64,
    /// Rotation of the stripes from the axis normal.
    pub crossing_angle: f64,
}

impl PedestrianCrossing {
    pub fn new(id: impl Into<String>, edge: EdgeId, s: f64, width: f64, crossing_angle: f64) -> Self {
        PedestrianCrossing {
            object: StreetObject {
                id: id.into(),
                kind: CROSSING_KIND.into(),
                position: Position::AxisRelative { edge, s, lateral_offset: 0.0 },
                orientation: OrientationMode::AxisRelative,
                angle: crossing_angle,
            },
            width,
            crossing_angle,
        }
    }
}

fn check_abscissa(obj: &StreetObject, axis: &Polyline, s: f64) -> Result<(), ObjectError> {
    let len = axis.length();
    if !(0.0..=len).contains(&s) {
        return Err(obj.invalid(format!("abscissa {s} outside [0, {len:.3}]")));
    }
    Ok(())
}

/// Nearest hit of the ray `o + t * d` (t > 0) with the polygon boundary:
/// `(t, segment index in the exterior ring or usize::MAX for holes, point)`.
fn ray_hit(o: Point2, d: Point2, poly: &Polygon) -> Option<(f64, usize, Point2)> {
    let mut best: Option<(f64, usize, Point2)> = None;
    let mut consider = |ring: &[Point2], tag: Option<usize>| {
        for (i, w) in ring.windows(2).enumerate() {
            let s = w[1] - w[0];
            let den = d.cross(s);
            if den.abs() < 1e-15 {
                continue;
            }
            let t = (w[0] - o).cross(s) / den;
            let u = (w[0] - o).cross(d) / den;
            if t > 1e-9 && (-1e-12..=1.0 + 1e-12).contains(&u) && best.map_or(true, |b| t < b.0) {
                best = Some((t, tag.unwrap_or(i), o + d * t));
            }
        }
    };
    consider(poly.exterior(), None);
    for h in poly.holes() {
        consider(h, Some(usize::MAX));
    }
    best
}

/// World position and heading of an object.
pub fn place_object(
    obj: &StreetObject,
    axis: Option<&Polyline>,
    section: Option<&Polygon>,
) -> Result<(Point2, f64), ObjectError> {
    let frame = |s: f64| -> Result<(Point2, Point2), ObjectError> {
        let axis = axis.ok_or_else(|| obj.invalid("relative placement without a host axis"))?;
        check_abscissa(obj, axis, s)?;
        let p = interpolate(axis, s).map_err(|e| obj.invalid(e.to_string()))?;
        Ok((p, axis.tangent_at(s)))
    };
    let (point, tangent) = match &obj.position {
        Position::Absolute { point } => (*point, None),
        Position::AxisRelative { s, lateral_offset, .. } => {
            let (p, t) = frame(*s)?;
            (p + t.perp() * *lateral_offset, Some(t))
        }
        Position::SidewalkRelative { s, lateral_offset, .. } => {
            let (p, t) = frame(*s)?;
            let section = section.ok_or_else(|| obj.invalid("sidewalk placement without a section surface"))?;
            let dir = if *lateral_offset < 0.0 { -t.perp() } else { t.perp() };
            let (_, _, edge) = ray_hit(p, dir, section).ok_or_else(|| obj.invalid("no section boundary beside the axis"))?;
            (edge - dir * lateral_offset.abs(), Some(t))
        }
    };
    let angle = match obj.orientation {
        OrientationMode::Absolute => obj.angle,
        OrientationMode::AxisRelative => {
            let t = match tangent {
                Some(t) => t,
                None => match &obj.position {
                    Position::Absolute { point } => {
                        let axis = axis.ok_or_else(|| obj.invalid("axis-relative heading without a host axis"))?;
                        axis.tangent_at(crate::geom::locate_along(axis, *point))
                    }
                    _ => unreachable!("relative positions carry a tangent"),
                },
            };
            t.angle() + obj.angle
        }
    };
    Ok((point, angle))
}

/// Exterior ring path walked counter-clockwise from hit `a` to hit `b`.
fn ring_walk(ring: &[Point2], a: (usize, Point2), b: (usize, Point2)) -> Vec<Point2> {
    let n = ring.len() - 1;
    let mut out = vec![a.1];
    let same_seg_forward = a.0 == b.0 && (b.1 - ring[a.0]).norm() >= (a.1 - ring[a.0]).norm();
    if !same_seg_forward {
        let mut i = (a.0 + 1) % n;
        loop {
            out.push(ring[i]);
            if i == b.0 {
                break;
            }
            i = (i + 1) % n;
        }
    }
    out.push(b.1);
    out
}

/// Surface of a pedestrian crossing: rays cast left and right of two axis
/// points are cut by the section boundary, and the boundary portions
/// between same-side hits are sewn to the ray chords.
pub fn crossing_surface(pc: &PedestrianCrossing, axis: &Polyline, section: &SectionSurface) -> Result<Polygon, ObjectError> {
    let obj = &pc.object;
    let out = |reason: String| ObjectError::CrossingOutOfSurface { id: obj.id.clone(), reason };
    if !(pc.width >= MIN_CROSSING_WIDTH) {
        return Err(obj.invalid(format!("width {} below {MIN_CROSSING_WIDTH} m", pc.width)));
    }
    let s = match &obj.position {
        Position::AxisRelative { s, .. } | Position::SidewalkRelative { s, .. } => *s,
        Position::Absolute { .. } => return Err(obj.invalid("a crossing needs a host edge")),
    };
    let cos = pc.crossing_angle.cos();
    if cos < 0.1 {
        return Err(obj.invalid(format!("crossing angle {} too close to the axis", pc.crossing_angle)));
    }
    let half = 0.5 * pc.width / cos;
    let (s0, s1) = (s - half, s + half);
    if s0 < section.s_start - 1e-9 || s1 > section.s_end + 1e-9 {
        return Err(out(format!("[{s0:.3}, {s1:.3}] outside section [{:.3}, {:.3}]", section.s_start, section.s_end)));
    }
    let poly = &section.polygon;
    let mut hits = Vec::new();
    for si in [s0, s1] {
        let p = interpolate(axis, si).map_err(|e| out(e.to_string()))?;
        let dir = axis.tangent_at(si).perp().rotate(pc.crossing_angle);
        let mut side = Vec::new();
        for d in [dir, -dir] {
            match ray_hit(p, d, poly) {
                Some((_, seg, q)) if seg != usize::MAX => side.push((seg, q)),
                _ => return Err(out(format!("ray at s={si:.3} misses the section boundary"))),
            }
        }
        hits.push(side);
    }
    let (l0, r0) = (hits[0][0], hits[0][1]);
    let (l1, r1) = (hits[1][0], hits[1][1]);
    let ring = poly.exterior();
    let mut pts = ring_walk(ring, r0, r1);
    pts.extend(ring_walk(ring, l1, l0));
    let sewn = Polygon::from_ring(pts).map_err(|e| out(e.to_string()))?;
    // clip to the section so boundary rounding never leaks outside
    intersection(&[sewn], std::slice::from_ref(poly), 1e-6)
        .into_iter()
        .max_by(|a, b| a.area().total_cmp(&b.area()))
        .ok_or_else(|| out("empty crossing surface".into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub description: String,
    pub orientation: OrientationMode,
}

/// Object kinds with a description and default orientation mode. Text form:
/// one `kind = description | axis|absolute` per line, `#` comments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Catalog {
    pub entries: BTreeMap<String, CatalogEntry>,
}

impl Default for Catalog {
    fn default() -> Self {
        let mut entries = BTreeMap::new();
        for (k, d, o) in [
            (CROSSING_KIND, "striped pedestrian crossing", OrientationMode::AxisRelative),
            ("traffic_light", "traffic signal head", OrientationMode::AxisRelative),
            ("bus_stop", "bus stop shelter", OrientationMode::AxisRelative),
            ("street_lamp", "street lighting pole", OrientationMode::Absolute),
            ("tree", "street tree", OrientationMode::Absolute),
        ] {
            entries.insert(k.to_string(), CatalogEntry { description: d.into(), orientation: o });
        }
        Catalog { entries }
    }
}

impl Catalog {
    pub fn parse(text: &str) -> Result<Catalog, ObjectError> {
        let mut cat = Catalog::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |reason: &str| ObjectError::Catalog { line: i + 1, reason: reason.into() };
            let (key, rest) = line.split_once('=').ok_or_else(|| err("expected `kind = description | mode`"))?;
            let key = key.trim();
            if key.is_empty() || key.contains(char::is_whitespace) {
                return Err(err("kind must be a single word"));
            }
            let (desc, mode) = match rest.rsplit_once('|') {
                Some((d, m)) => (d.trim(), m.trim()),
                None => (rest.trim(), "axis"),
            };
            let orientation = match mode {
                "axis" => OrientationMode::AxisRelative,
                "absolute" => OrientationMode::Absolute,
                _ => return Err(err("orientation must be `axis` or `absolute`")),
            };
            cat.entries.insert(key.to_string(), CatalogEntry { description: desc.to_string(), orientation });
        }
        Ok(cat)
    }

    pub fn load(path: &Path) -> Result<Catalog, ObjectError> {
        Catalog::parse(&std::fs::read_to_string(path)?)
    }

    pub fn contains(&self, kind: &str) -> bool {
        self.entries.contains_key(kind)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::settings::Settings;
    use crate::surface::cut_sections;
    use std::f64::consts::FRAC_PI_2;

    fn p(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    fn axis() -> Polyline {
        Polyline::segment(p(0.0, 0.0), p(10.0, 0.0)).unwrap()
    }

    fn rel(s: f64, off: f64, angle: f64) -> StreetObject {
        StreetObject {
            id: "o".into(),
            kind: "tree".into(),
            position: Position::AxisRelative { edge: "e".into(), s, lateral_offset: off },
            orientation: OrientationMode::AxisRelative,
            angle,
        }
    }

    #[test]
    fn absolute_identity() {
        let o = StreetObject {
            id: "a".into(),
            kind: "tree".into(),
            position: Position::Absolute { point: p(3.0, 4.0) },
            orientation: OrientationMode::Absolute,
            angle: 0.0,
        };
        assert_eq!(place_object(&o, None, None).unwrap(), (p(3.0, 4.0), 0.0));
    }

    #[test]
    fn axis_relative() {
        let a = axis();
        assert_eq!(place_object(&rel(4.0, 2.0, 0.0), Some(&a), None).unwrap(), (p(4.0, 2.0), 0.0));
        assert_eq!(place_object(&rel(4.0, 2.0, FRAC_PI_2), Some(&a), None).unwrap().1, FRAC_PI_2);
        assert!(matches!(place_object(&rel(4.0, 2.0, 0.0), None, None), Err(ObjectError::InvalidObject { .. })));
        assert!(place_object(&rel(11.0, 0.0, 0.0), Some(&a), None).is_err());
    }

    #[test]
    fn sidewalk_relative() {
        let a = axis();
        let sec = Polygon::rect(p(0.0, -4.0), p(10.0, 4.0)).unwrap();
        let mut o = rel(5.0, -1.0, 0.0);
        o.position = Position::SidewalkRelative { edge: "e".into(), s: 5.0, lateral_offset: -1.0 };
        let (q, _) = place_object(&o, Some(&a), Some(&sec)).unwrap();
        assert!(q.dist(p(5.0, -3.0)) < 1e-12);
    }

    fn section() -> (Polyline, SectionSurface) {
        let a = Polyline::segment(p(0.0, 0.0), p(20.0, 0.0)).unwrap();
        let s = Settings::default();
        let cut = cut_sections(&"e".into(), &a, 4.0, Some(0.0), Some(20.0), &s).unwrap();
        (a, cut.section.unwrap())
    }

    #[test]
    fn straight_crossing() {
        let (a, sec) = section();
        let pc = PedestrianCrossing::new("c", "e".into(), 10.0, 3.0, 0.0);
        let poly = crossing_surface(&pc, &a, &sec).unwrap();
        assert!((poly.area() - 24.0).abs() < 1e-6);
        let bb = poly.bbox();
        assert!((bb.min.x - 8.5).abs() < 1e-6 && (bb.max.x - 11.5).abs() < 1e-6);
    }

    #[test]
    fn skewed_crossing() {
        let (a, sec) = section();
        let pc = PedestrianCrossing::new("c", "e".into(), 10.0, 3.0, 30f64.to_radians());
        let poly = crossing_surface(&pc, &a, &sec).unwrap();
        let expect = 24.0 / 30f64.to_radians().cos();
        assert!((poly.area() - expect).abs() / expect < 0.01);
    }

    #[test]
    fn spilling_crossing_fails() {
        let (a, sec) = section();
        let pc = PedestrianCrossing::new("c", "e".into(), 1.0, 3.0, 0.0);
        assert!(matches!(crossing_surface(&pc, &a, &sec), Err(ObjectError::CrossingOutOfSurface { .. })));
        let thin = PedestrianCrossing::new("c", "e".into(), 10.0, 0.2, 0.0);
        assert!(matches!(crossing_surface(&thin, &a, &sec), Err(ObjectError::InvalidObject { .. })));
    }

    #[test]
    fn catalog_extension() {
        let c = Catalog::parse("# extra\nbench = public bench | absolute\nsign = road sign\n").unwrap();
        assert!(c.contains("bench") && c.contains("tree"));
        assert_eq!(c.entries["sign"].orientation, OrientationMode::AxisRelative);
        assert!(Catalog::parse("bad line").is_err());
    }
}
