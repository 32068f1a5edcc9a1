//! Lanes, lane groups, intersection trajectories and roundabout detection.

mod interconnect;
mod roundabout;
mod trigram;

use serde::{Deserialize, Serialize};

use crate::geom::{offset_curve, Polyline};
use crate::network::{Direction, EdgeId};
use crate::settings::Settings;
use crate::Diagnostic;

pub use interconnect::{generate_interconnections, IncidentLane, Interconnection};
pub use roundabout::{dbscan, detect_roundabouts, Evidence, RoundaboutCandidate};
pub use trigram::{trigram_similarity, trigrams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    Right,
    Left,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lane {
    pub id: String,
    pub edge: EdgeId,
    /// 1-based, ordered by distance to the axis, right before left.
    pub index: u32,
    pub side: Side,
    /// Signed distance to the axis, positive on the left.
    pub offset: f64,
    /// Oriented in the travel direction.
    pub geometry: Polyline,
    pub direction_matches_axis: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaneGroup {
    pub edge: EdgeId,
    pub direction_matches_axis: bool,
    /// Right to left.
    pub lanes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LaneLayout {
    pub lanes: Vec<Lane>,
    pub separators: Vec<Polyline>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Signed lane offsets, right-most first: `(k - (n - 1) / 2) * lane_width`.
pub fn lane_offsets(half_width: f64, n: u32) -> Vec<f64> {
    let lw = 2.0 * half_width / n as f64;
    (0..n).map(|k| (k as f64 - (n as f64 - 1.0) / 2.0) * lw).collect()
}

/// Lane center lines and separators of one edge. On two-way roads lanes
/// right of the axis (center lane included) follow the axis direction.
pub fn generate_lanes(
    edge: &EdgeId,
    axis: &Polyline,
    half_width: f64,
    lane_count: u32,
    direction: Direction,
    settings: &Settings,
) -> LaneLayout {
    let mut out = LaneLayout::default();
    if lane_count == 0 {
        out.diagnostics.push(Diagnostic::new(edge.as_str(), "no lanes requested"));
        return out;
    }
    let offsets = lane_offsets(half_width, lane_count);
    let mut order: Vec<usize> = (0..offsets.len()).collect();
    let side_of = |o: f64| if o <= 1e-12 { Side::Right } else { Side::Left };
    order.sort_by(|&a, &b| {
        offsets[a].abs().total_cmp(&offsets[b].abs()).then(side_of(offsets[a]).cmp(&side_of(offsets[b])))
    });
    let mut index = vec![0u32; offsets.len()];
    for (rank, &k) in order.iter().enumerate() {
        index[k] = rank as u32 + 1;
    }
    for (k, &off) in offsets.iter().enumerate() {
        let side = side_of(off);
        let along = match direction {
            Direction::Direct => true,
            Direction::Reverse => false,
            Direction::Both => side == Side::Right,
        };
        let geometry = match offset_curve(axis, off, settings.precision) {
            Ok(g) if g.length() >= settings.lane_min_length => g,
            _ => {
                out.diagnostics.push(Diagnostic::new(
                    edge.as_str(),
                    format!("lane at offset {off:.3} collapsed and was dropped"),
                ));
                continue;
            }
        };
        out.lanes.push(Lane {
            id: format!("{edge}/{}", index[k]),
            edge: edge.clone(),
            index: index[k],
            side,
            offset: off,
            geometry: if along { geometry } else { geometry.reversed() },
            direction_matches_axis: along,
        });
    }
    for w in offsets.windows(2) {
        if let Ok(g) = offset_curve(axis, 0.5 * (w[0] + w[1]), settings.precision) {
            out.separators.push(g);
        }
    }
    out.lanes.sort_by_key(|l| l.index);
    out
}

/// Maximal runs of adjacent lanes sharing a direction, right to left.
pub fn lane_groups(edge: &EdgeId, lanes: &[Lane]) -> Vec<LaneGroup> {
    let mut sorted: Vec<&Lane> = lanes.iter().filter(|l| l.edge == *edge).collect();
    sorted.sort_by(|a, b| a.offset.total_cmp(&b.offset));
    let mut groups: Vec<LaneGroup> = Vec::new();
    for l in sorted {
        match groups.last_mut() {
            Some(g) if g.direction_matches_axis == l.direction_matches_axis => g.lanes.push(l.id.clone()),
            _ => groups.push(LaneGroup {
                edge: edge.clone(),
                direction_matches_axis: l.direction_matches_axis,
                lanes: vec![l.id.clone()],
            }),
        }
    }
    groups
}
