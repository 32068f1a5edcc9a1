use i_overlay::core::fill_rule::FillRule;
use i_overlay::core::overlay_rule::OverlayRule;
use i_overlay::float::overlay::FloatOverlay;

use super::arrangement::ring_is_simple;
use super::{GeomError, Point2, Polygon};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoolOp {
    Union,
    Intersection,
    Difference,
}

type Shapes = Vec<Vec<Vec<[f64; 2]>>>;

fn snap(v: f64, grid: f64) -> f64 {
    if grid > 0.0 {
        (v / grid).round() * grid
    } else {
        v
    }
}

fn to_shapes(polys: &[Polygon], grid: f64) -> Shapes {
    polys
        .iter()
        .map(|p| {
            p.rings()
                .map(|r| r[..r.len() - 1].iter().map(|q| [snap(q.x, grid), snap(q.y, grid)]).collect())
                .collect()
        })
        .collect()
}

fn from_shapes(shapes: Shapes) -> Vec<Polygon> {
    shapes
        .into_iter()
        .filter_map(|shape| {
            let mut rings = shape
                .into_iter()
                .map(|c| c.into_iter().map(|[x, y]| Point2::new(x, y)).collect::<Vec<_>>());
            let ext = rings.next()?;
            Polygon::new(ext, rings.collect()).ok()
        })
        .filter(|p| p.area() > 1e-12)
        .collect()
}

fn overlay(a: &[Polygon], b: &[Polygon], rule: OverlayRule, grid: f64) -> Vec<Polygon> {
    let sa = to_shapes(a, grid);
    let sb = to_shapes(b, grid);
    if sa.is_empty() && sb.is_empty() {
        return Vec::new();
    }
    let out = FloatOverlay::<[f64; 2], i64>::from_subj_and_clip(&sa, &sb).overlay(rule, FillRule::NonZero);
    from_shapes(out)
}

fn check_valid(polys: &[Polygon]) -> Result<(), GeomError> {
    for (i, p) in polys.iter().enumerate() {
        for r in p.rings() {
            if r.len() < 4 || r.first() != r.last() {
                return Err(GeomError::InvalidGeometry(format!("polygon {i}: ring is not closed")));
            }
            if !ring_is_simple(r) {
                return Err(GeomError::InvalidGeometry(format!("polygon {i}: self-intersecting ring")));
            }
        }
    }
    Ok(())
}

/// Regularized set operation between two polygon sets. Inputs are snapped
/// to `grid` before the overlay.
pub fn boolean(a: &[Polygon], b: &[Polygon], op: BoolOp, grid: f64) -> Result<Vec<Polygon>, GeomError> {
    check_valid(a)?;
    check_valid(b)?;
    Ok(match op {
        BoolOp::Union => union(a, b, grid),
        BoolOp::Intersection => intersection(a, b, grid),
        BoolOp::Difference => difference(a, b, grid),
    })
}

/// Union without ring validation; callers own the validity of their inputs.
pub fn union(a: &[Polygon], b: &[Polygon], grid: f64) -> Vec<Polygon> {
    overlay(a, b, OverlayRule::Union, grid)
}

pub fn intersection(a: &[Polygon], b: &[Polygon], grid: f64) -> Vec<Polygon> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    overlay(a, b, OverlayRule::Intersect, grid)
}

pub fn difference(a: &[Polygon], b: &[Polygon], grid: f64) -> Vec<Polygon> {
    if a.is_empty() {
        return Vec::new();
    }
    if b.is_empty() {
        return a.to_vec();
    }
    overlay(a, b, OverlayRule::Difference, grid)
}

/// Dissolve a set of possibly overlapping polygons.
pub fn union_all(polys: &[Polygon], grid: f64) -> Vec<Polygon> {
    match polys.len() {
        0 => Vec::new(),
        _ => overlay(polys, &[], OverlayRule::Subject, grid),
    }
}

pub fn total_area(polys: &[Polygon]) -> f64 {
    polys.iter().map(Polygon::area).sum()
}
