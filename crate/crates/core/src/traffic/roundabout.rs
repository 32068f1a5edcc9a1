use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::trigram_similarity;
use crate::geom::{fit_circle_3pts, Point2};
use crate::network::{AxisId, FaceId, NodeId, Topology};
use crate::settings::Settings;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    /// Share of vertex quadruplets on the supporting axes that fit the circle.
    pub geometric: f64,
    pub same_name: bool,
    pub keyword: bool,
}

impl Evidence {
    pub fn score(&self, weights: [f64; 3]) -> f64 {
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return 0.0;
        }
        let flag = |b: bool| if b { 1.0 } else { 0.0 };
        (weights[0] * self.geometric + weights[1] * flag(self.same_name) + weights[2] * flag(self.keyword)) / total
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundaboutCandidate {
    pub id: String,
    pub face: Option<FaceId>,
    pub nodes: Vec<NodeId>,
    pub center: Point2,
    pub radius: f64,
    pub score: f64,
    pub evidence: Evidence,
}

/// Density clustering; returns a cluster label per point, `None` for noise.
/// Clusters are numbered in order of their first core point.
pub fn dbscan(points: &[[f64; 3]], eps: f64, min_pts: usize) -> Vec<Option<usize>> {
    let d2 = |a: &[f64; 3], b: &[f64; 3]| (0..3).map(|i| (a[i] - b[i]).powi(2)).sum::<f64>();
    let neighbors = |i: usize| -> Vec<usize> {
        (0..points.len()).filter(|&j| d2(&points[i], &points[j]) <= eps * eps).collect()
    };
    let mut labels: Vec<Option<usize>> = vec![None; points.len()];
    let mut visited = vec![false; points.len()];
    let mut next = 0;
    for i in 0..points.len() {
        if visited[i] {
            continue;
        }
        visited[i] = true;
        let n = neighbors(i);
        if n.len() < min_pts {
            continue;
        }
        let c = next;
        next += 1;
        labels[i] = Some(c);
        let mut queue = n;
        while let Some(j) = queue.pop() {
            if labels[j].is_none() {
                labels[j] = Some(c);
            }
            if visited[j] {
                continue;
            }
            visited[j] = true;
            let nj = neighbors(j);
            if nj.len() >= min_pts {
                queue.extend(nj);
            }
        }
    }
    labels
}

fn has_keyword(name: &str) -> bool {
    name.split(|c: char| !c.is_alphanumeric())
        .any(|t| t.eq_ignore_ascii_case("PL") || t.eq_ignore_ascii_case("RPT"))
}

fn face_axes(topo: &Topology, face: &FaceId) -> BTreeSet<AxisId> {
    topo.faces[face].boundary.iter().filter_map(|(e, _)| topo.edges.get(e).map(|e| e.axis.clone())).collect()
}

fn face_nodes(topo: &Topology, face: &FaceId) -> Vec<NodeId> {
    let mut out: BTreeSet<NodeId> = BTreeSet::new();
    for (e, _) in &topo.faces[face].boundary {
        if let Some(e) = topo.edges.get(e) {
            out.insert(e.start.clone());
            out.insert(e.end.clone());
        }
    }
    out.into_iter().collect()
}

fn toponym_evidence(topo: &Topology, face: &FaceId, settings: &Settings) -> (bool, bool) {
    let names: Vec<&str> = face_axes(topo, face).iter().filter_map(|a| topo.axes.get(a)).map(|a| a.name.as_str()).collect();
    let keyword = names.iter().any(|n| has_keyword(n));
    let same_name = names.len() >= 2
        && names.iter().all(|n| !n.trim().is_empty())
        && names.iter().enumerate().all(|(i, a)| names[i + 1..].iter().all(|b| trigram_similarity(a, b) >= settings.name_sim));
    (same_name, keyword)
}

/// Roundabout candidates from circular axis geometry and street names.
pub fn detect_roundabouts(topo: &Topology, settings: &Settings) -> Vec<RoundaboutCandidate> {
    // circle support: (cx, cy, r) per accepted quadruplet, with its axis
    let mut pts: Vec<[f64; 3]> = Vec::new();
    let mut owner: Vec<&AxisId> = Vec::new();
    let mut windows: BTreeMap<&AxisId, usize> = BTreeMap::new();
    for (id, axis) in &topo.axes {
        let v = axis.geometry.vertices();
        for w in v.windows(4) {
            *windows.entry(id).or_default() += 1;
            let Ok((c, r)) = fit_circle_3pts(w[0], w[1], w[2]) else { continue };
            if (w[3].dist(c) - r).abs() <= settings.hough_tol
                && (settings.roundabout_r_min..=settings.roundabout_r_max).contains(&r)
            {
                pts.push([c.x, c.y, r]);
                owner.push(id);
            }
        }
    }
    let labels = dbscan(&pts, settings.roundabout_eps, settings.roundabout_min_pts);
    let mut clusters: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        if let Some(l) = l {
            clusters.entry(*l).or_default().push(i);
        }
    }
    let bounded: Vec<(&FaceId, crate::geom::Polygon)> =
        topo.faces.iter().filter_map(|(id, f)| f.polygon().map(|p| (id, p))).collect();
    let mut out = Vec::new();
    let mut claimed: BTreeSet<FaceId> = BTreeSet::new();
    for members in clusters.values() {
        let n = members.len() as f64;
        let center = Point2::new(
            members.iter().map(|&i| pts[i][0]).sum::<f64>() / n,
            members.iter().map(|&i| pts[i][1]).sum::<f64>() / n,
        );
        let radius = members.iter().map(|&i| pts[i][2]).sum::<f64>() / n;
        let axes: BTreeSet<&AxisId> = members.iter().map(|&i| owner[i]).collect();
        let total: usize = axes.iter().map(|a| windows[a]).sum();
        let geometric = (n / total as f64).min(1.0);
        let face = bounded
            .iter()
            .filter(|(_, p)| p.contains(center))
            .min_by(|a, b| a.1.area().total_cmp(&b.1.area()))
            .map(|(id, _)| (*id).clone());
        let (same_name, keyword) = face.as_ref().map_or((false, false), |f| toponym_evidence(topo, f, settings));
        let nodes = match &face {
            Some(f) => face_nodes(topo, f),
            None => {
                let mut s = BTreeSet::new();
                for a in &axes {
                    for e in topo.axis_edges.get(*a).into_iter().flatten() {
                        s.insert(topo.edges[e].start.clone());
                        s.insert(topo.edges[e].end.clone());
                    }
                }
                s.into_iter().collect()
            }
        };
        if let Some(f) = &face {
            claimed.insert(f.clone());
        }
        let evidence = Evidence { geometric, same_name, keyword };
        out.push(RoundaboutCandidate {
            id: String::new(),
            face,
            nodes,
            center,
            radius,
            score: evidence.score(settings.roundabout_weights),
            evidence,
        });
    }
    for (id, poly) in &bounded {
        if claimed.contains(*id) {
            continue;
        }
        let (same_name, keyword) = toponym_evidence(topo, id, settings);
        if !(same_name || keyword) {
            continue;
        }
        let evidence = Evidence { geometric: 0.0, same_name, keyword };
        out.push(RoundaboutCandidate {
            id: String::new(),
            face: Some((*id).clone()),
            nodes: face_nodes(topo, id),
            center: poly.centroid(),
            radius: (poly.area() / std::f64::consts::PI).sqrt(),
            score: evidence.score(settings.roundabout_weights),
            evidence,
        });
    }
    out.sort_by(|a, b| a.center.lex_cmp(&b.center));
    for (i, c) in out.iter_mut().enumerate() {
        c.id = format!("rb{i}");
    }
    out
}
