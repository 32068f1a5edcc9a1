//! Section surfaces, intersection surfaces, width transitions and city blocks.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{
    arc_to_polyline, buffer, build_area, difference, interpolate, locate_along, union_all, variable_buffer, CircleArc,
    GeomError, Linework, Point2, Polygon, Polyline, VariableWidthPolyline,
};
use crate::junction::Corner;
use crate::network::{EdgeId, FaceId, NodeId};
use crate::settings::{Settings, TransitionMode};
use crate::Diagnostic;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SurfaceError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no surface could be assembled at {0}")]
    Empty(String),
    #[error(transparent)]
    Geom(#[from] GeomError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionSurface {
    pub edge: EdgeId,
    pub polygon: Polygon,
    /// Border lines at the start and end of the edge; absent at dead ends.
    pub border_lines: [Option<Polyline>; 2],
    pub s_start: f64,
    pub s_end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntersectionSurface {
    pub node: NodeId,
    pub polygon: Polygon,
    pub arcs: Vec<CircleArc>,
}

/// What remains of a face once the road surfaces are removed; may be
/// empty or split in several parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CityBlock {
    pub face: FaceId,
    pub parts: Vec<Polygon>,
}

impl CityBlock {
    pub fn area(&self) -> f64 {
        self.parts.iter().map(Polygon::area).sum()
    }
}

/// The result of cutting one edge buffer by its border lines.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeCut {
    pub section: Option<SectionSurface>,
    pub start_scrap: Vec<Polygon>,
    pub end_scrap: Vec<Polygon>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Straight cut line through the point at abscissa `s`, normal to the chord
/// of the axis over the local window, long enough to cross the buffer.
pub fn border_line(axis: &Polyline, s: f64, w: f64, settings: &Settings) -> Result<Polyline, SurfaceError> {
    let len = axis.length();
    let p = interpolate(axis, s)?;
    let a = interpolate(axis, (s - settings.local_window).max(0.0))?;
    let b = interpolate(axis, (s + settings.local_window).min(len))?;
    let dir = (b - a).normalized().unwrap_or_else(|| axis.tangent_at(s));
    let half = w * (1.0 + settings.overcut_factor);
    let n = dir.perp();
    Ok(Polyline::segment(p - n * half, p + n * half)?)
}

fn largest(mut polys: Vec<Polygon>) -> Option<Polygon> {
    polys.sort_by(|a, b| b.area().total_cmp(&a.area()));
    polys.into_iter().next()
}

/// Split `buffer(axis, w)` at the border abscissae (measured from the axis
/// start). The middle piece is the section, the end pieces are the scraps
/// handed to the intersections.
pub fn cut_sections(
    edge: &EdgeId,
    axis: &Polyline,
    w: f64,
    s_start: Option<f64>,
    s_end: Option<f64>,
    settings: &Settings,
) -> Result<EdgeCut, SurfaceError> {
    let prec = settings.precision;
    let body = buffer(axis, w, prec)?;
    let mut diagnostics = Vec::new();
    let (mut lo, mut hi) = (s_start, s_end);
    let mut with_section = true;
    if let (Some(a), Some(b)) = (lo, hi) {
        if a >= b {
            // borders overlap: the junctions share the edge, no section left
            let m = 0.5 * (a + b);
            lo = Some(m);
            hi = Some(m);
            with_section = false;
            diagnostics.push(Diagnostic::new(edge.as_str(), "edge too short for a section, split between its junctions"));
        }
    }
    let mut parts = vec![Linework::Area(body.clone())];
    let mut lines = [None, None];
    if let Some(s) = lo {
        let l = border_line(axis, s, w, settings)?;
        parts.push(Linework::Line(l.clone()));
        lines[0] = Some(l);
    }
    if let Some(s) = hi {
        let l = border_line(axis, s, w, settings)?;
        if with_section {
            parts.push(Linework::Line(l.clone()));
        }
        lines[1] = Some(l);
    }
    let faces = if parts.len() > 1 { build_area(&parts, prec.snap_grid) } else { vec![body.clone()] };
    let (lo_s, hi_s) = (lo.unwrap_or(f64::NEG_INFINITY), hi.unwrap_or(f64::INFINITY));
    let (mut start_scrap, mut mid, mut end_scrap) = (Vec::new(), Vec::new(), Vec::new());
    for f in faces {
        let s = locate_along(axis, f.interior_point());
        if s < lo_s {
            start_scrap.push(f);
        } else if s > hi_s {
            end_scrap.push(f);
        } else {
            mid.push(f);
        }
    }
    if !with_section {
        end_scrap.extend(mid);
        return Ok(EdgeCut { section: None, start_scrap, end_scrap, diagnostics });
    }
    let cut_ok = (lo.is_none() || !start_scrap.is_empty()) && (hi.is_none() || !end_scrap.is_empty());
    let merged = if mid.len() > 1 { union_all(&mid, prec.snap_grid) } else { mid };
    let polygon = match (cut_ok, largest(merged)) {
        (true, Some(p)) => p,
        _ => {
            diagnostics.push(Diagnostic::new(edge.as_str(), "border lines failed to cut the buffer, full buffer used"));
            start_scrap.clear();
            end_scrap.clear();
            body
        }
    };
    let len = axis.length();
    let section = SectionSurface {
        edge: edge.clone(),
        polygon,
        border_lines: lines,
        s_start: lo.unwrap_or(0.0),
        s_end: hi.unwrap_or(len),
    };
    Ok(EdgeCut { section: Some(section), start_scrap, end_scrap, diagnostics })
}

fn pick_at(polys: Vec<Polygon>, jc: Point2) -> Option<Polygon> {
    if let Some(i) = polys.iter().position(|p| p.contains(jc)) {
        return polys.into_iter().nth(i);
    }
    polys.into_iter().min_by(|a, b| a.distance_to_boundary(jc).total_cmp(&b.distance_to_boundary(jc)))
}

/// Assemble the surface of a junction from the scraps of its incident
/// edges and its corner arcs, then clear it of the incident sections.
pub fn intersection_surface(
    node: &NodeId,
    jc: Point2,
    corners: &[Corner],
    scraps: &[Polygon],
    sections: &[Polygon],
    settings: &Settings,
) -> Result<IntersectionSurface, SurfaceError> {
    let prec = settings.precision;
    let mut parts: Vec<Linework> = scraps.iter().cloned().map(Linework::Area).collect();
    let mut arcs = Vec::new();
    let mut fans = Vec::new();
    for c in corners {
        let (Some(arc), true) = (c.solution.arc, c.solution.is_solved()) else { continue };
        let line = arc_to_polyline(&arc, prec.arc_tolerance)?;
        let mut fan = vec![jc];
        fan.extend_from_slice(line.vertices());
        if let Ok(p) = Polygon::from_ring(fan) {
            fans.push(p);
        }
        parts.push(Linework::Line(line));
        arcs.push(arc);
    }
    let faces = build_area(&parts, prec.snap_grid);
    let kept: Vec<Polygon> = faces
        .into_iter()
        .filter(|f| {
            let q = f.interior_point();
            scraps.iter().any(|s| s.contains(q)) || fans.iter().any(|s| s.contains(q))
        })
        .collect();
    let merged = difference(&union_all(&kept, prec.snap_grid), sections, prec.snap_grid);
    let polygon = match pick_at(merged, jc) {
        Some(p) => p,
        None => pick_at(union_all(scraps, prec.snap_grid), jc).ok_or_else(|| SurfaceError::Empty(node.to_string()))?,
    };
    Ok(IntersectionSurface { node: node.clone(), polygon, arcs })
}

/// Surface over the first `length` meters of `axis` whose width changes
/// linearly from `w_start` to `w_end`. Symmetric mode is a variable buffer;
/// left and right modes keep one side straight at the smaller half width.
pub fn width_transition(
    axis: &Polyline,
    w_start: f64,
    w_end: f64,
    mode: TransitionMode,
    length: f64,
    settings: &Settings,
) -> Result<Polygon, SurfaceError> {
    let prec = settings.precision;
    let total = axis.length();
    if !(length > 0.0) || length > total + 1e-9 {
        return Err(SurfaceError::InvalidParameter(format!("transition length {length} outside (0, {total}]")));
    }
    if !(w_start > 0.0 && w_end > 0.0) {
        return Err(SurfaceError::InvalidParameter("widths must be positive".into()));
    }
    let window = if length >= total { axis.clone() } else { axis.slice(0.0, length)? };
    if (w_start - w_end).abs() <= 1e-12 {
        return Ok(buffer(&window, w_start, prec)?);
    }
    let mut acc = 0.0;
    let mut ss = vec![0.0];
    for (a, b) in window.segments() {
        acc += a.dist(b);
        ss.push(acc);
    }
    let width = |s: f64| w_start + (w_end - w_start) * (s / acc).clamp(0.0, 1.0);
    if mode == TransitionMode::Symmetric {
        let radii = ss.iter().map(|&s| width(s)).collect();
        return Ok(variable_buffer(&VariableWidthPolyline::new(window.vertices().to_vec(), radii)?, prec)?);
    }
    let held = w_start.min(w_end);
    // sample finely enough that the flaring side follows the width law
    let n = ((acc / 0.5).ceil() as usize).max(ss.len() - 1).max(2);
    let mut right = Vec::with_capacity(n + 1);
    let mut left = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let s = acc * i as f64 / n as f64;
        let p = interpolate(&window, s)?;
        let a = interpolate(&window, (s - settings.local_window).max(0.0))?;
        let b = interpolate(&window, (s + settings.local_window).min(acc))?;
        let nrm = (b - a).normalized().unwrap_or_else(|| window.tangent_at(s)).perp();
        let flare = 2.0 * width(s) - held;
        let (l, r) = match mode {
            TransitionMode::Right => (flare, held),
            _ => (held, flare),
        };
        right.push(p - nrm * r);
        left.push(p + nrm * l);
    }
    left.reverse();
    right.extend(left);
    Ok(Polygon::from_ring(right)?)
}

/// City block of a bounded face: its polygon minus the road surfaces.
pub fn city_block(face: &FaceId, face_polygon: &Polygon, surfaces: &[Polygon], settings: &Settings) -> CityBlock {
    let parts = difference(std::slice::from_ref(face_polygon), surfaces, settings.precision.snap_grid);
    CityBlock { face: face.clone(), parts }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::total_area;

    fn p(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    fn line(pts: &[(f64, f64)]) -> Polyline {
        Polyline::new(pts.iter().map(|&(x, y)| p(x, y)).collect()).unwrap()
    }

    #[test]
    fn straight_border_line() {
        let s = Settings::default();
        let l = border_line(&line(&[(0.0, 0.0), (20.0, 0.0)]), 5.0, 4.0, &s).unwrap();
        assert!(l.first().dist(p(5.0, -4.4)) < 1e-12);
        assert!(l.last().dist(p(5.0, 4.4)) < 1e-12);
    }

    #[test]
    fn kinked_border_line() {
        let s = Settings::default();
        let l = border_line(&line(&[(0.0, 0.0), (10.0, 0.0), (10.0, 10.0)]), 10.0, 2.0, &s).unwrap();
        let d = (l.last() - l.first()).normalized().unwrap();
        assert!((d.x.abs() - d.y.abs()).abs() < 1e-12);
        assert!(d.x * d.y < 0.0);
    }

    #[test]
    fn rectangle_section() {
        let s = Settings::default();
        let cut = cut_sections(&"e".into(), &line(&[(0.0, 0.0), (20.0, 0.0)]), 4.0, Some(5.0), Some(15.0), &s).unwrap();
        let sec = cut.section.unwrap();
        assert!((sec.polygon.area() - 80.0).abs() < 1e-6);
        assert_eq!(cut.start_scrap.len(), 1);
        assert_eq!(cut.end_scrap.len(), 1);
        assert!(cut.diagnostics.is_empty());
    }

    #[test]
    fn dead_end_keeps_cap_in_section() {
        let s = Settings::default();
        let axis = line(&[(0.0, 0.0), (20.0, 0.0)]);
        let cut = cut_sections(&"e".into(), &axis, 4.0, Some(5.0), None, &s).unwrap();
        assert!(cut.end_scrap.is_empty());
        assert_eq!(cut.start_scrap.len(), 1);
        let full = buffer(&axis, 4.0, s.precision).unwrap().area();
        let total = cut.section.unwrap().polygon.area() + total_area(&cut.start_scrap);
        assert!((total - full).abs() < 1e-4, "{total} vs {full}");
    }

    #[test]
    fn borders_near_ends() {
        let s = Settings::default();
        let axis = line(&[(0.0, 0.0), (20.0, 0.0)]);
        let cut = cut_sections(&"e".into(), &axis, 4.0, Some(1e-3), Some(20.0 - 1e-3), &s).unwrap();
        let sec = cut.section.unwrap().polygon.area();
        assert!((sec - 8.0 * (20.0 - 2e-3)).abs() < 1e-5);
    }

    #[test]
    fn overlapping_borders_leave_no_section() {
        let s = Settings::default();
        let cut = cut_sections(&"e".into(), &line(&[(0.0, 0.0), (4.0, 0.0)]), 2.0, Some(3.0), Some(1.0), &s).unwrap();
        assert!(cut.section.is_none());
        assert_eq!(cut.start_scrap.len(), 1);
        assert_eq!(cut.end_scrap.len(), 1);
        assert_eq!(cut.diagnostics.len(), 1);
    }

    #[test]
    fn symmetric_transition() {
        let s = Settings::default();
        let axis = line(&[(0.0, 0.0), (10.0, 0.0)]);
        let poly = width_transition(&axis, 2.0, 4.0, TransitionMode::Symmetric, 10.0, &s).unwrap();
        let vl = VariableWidthPolyline::new(axis.vertices().to_vec(), vec![2.0, 4.0]).unwrap();
        let reference = variable_buffer(&vl, s.precision).unwrap();
        assert!((poly.area() - reference.area()).abs() < 1e-9);
        let same = width_transition(&axis, 3.0, 3.0, TransitionMode::Left, 10.0, &s).unwrap();
        assert!((same.area() - buffer(&axis, 3.0, s.precision).unwrap().area()).abs() < 1e-9);
        assert!(width_transition(&axis, 2.0, 4.0, TransitionMode::Symmetric, 11.0, &s).is_err());
    }

    #[test]
    fn right_transition_holds_one_side() {
        let s = Settings::default();
        let axis = line(&[(0.0, 0.0), (10.0, 0.0)]);
        let poly = width_transition(&axis, 2.0, 4.0, TransitionMode::Right, 10.0, &s).unwrap();
        let below: Vec<Point2> = poly.exterior().iter().copied().filter(|q| q.y < 0.0).collect();
        assert!(!below.is_empty());
        assert!(below.iter().all(|q| (q.y + 2.0).abs() < 1e-12));
        let top = poly.exterior().iter().map(|q| q.y).fold(f64::MIN, f64::max);
        assert!((top - 6.0).abs() < 1e-12);
    }

    #[test]
    fn block_without_surfaces_is_face() {
        let s = Settings::default();
        let face = crate::geom::square(p(0.0, 0.0), 100.0);
        let b = city_block(&FaceId("f".into()), &face, &[], &s);
        assert_eq!(b.parts, vec![face]);
    }
}
