//! Noding of linework and face enumeration of planar arrangements.

use std::collections::{HashMap, HashSet};

use super::{ring_contains, ring_signed_area, Point2, Polygon, Polyline};

/// Input pieces for [`build_area`].
#[derive(Debug, Clone)]
pub enum Linework {
    Line(Polyline),
    Area(Polygon),
    Segment(Point2, Point2),
}

impl Linework {
    fn push_segments(&self, out: &mut Vec<(Point2, Point2)>) {
        match self {
            Linework::Line(l) => out.extend(l.segments()),
            Linework::Area(p) => out.extend(p.boundary_segments()),
            Linework::Segment(a, b) => out.push((*a, *b)),
        }
    }
}

/// Fully noded linework: edges only meet at shared vertices.
#[derive(Debug, Clone, Default)]
pub struct NodedLines {
    pub vertices: Vec<Point2>,
    pub edges: Vec<(usize, usize)>,
}

type Key = (i64, i64);

fn key_of(p: Point2, grid: f64) -> Key {
    ((p.x / grid).round() as i64, (p.y / grid).round() as i64)
}

fn point_of(k: Key, grid: f64) -> Point2 {
    Point2::new(k.0 as f64 * grid, k.1 as f64 * grid)
}

fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    (b - a).cross(c - a)
}

fn dist_to_segment(p: Point2, a: Point2, b: Point2) -> f64 {
    super::closest_point_on_segment(a, b, p).0.dist(p)
}

/// Split every segment at its intersections with the others; coordinates are
/// snap-rounded to `grid`.
pub fn node_segments(segments: &[(Point2, Point2)], grid: f64) -> NodedLines {
    let grid = if grid > 0.0 { grid } else { 1e-9 };
    let eps = 0.5 * grid;
    let segs: Vec<(Key, Key)> = segments
        .iter()
        .map(|&(a, b)| (key_of(a, grid), key_of(b, grid)))
        .filter(|(a, b)| a != b)
        .collect();
    let pts: Vec<(Point2, Point2)> = segs.iter().map(|&(a, b)| (point_of(a, grid), point_of(b, grid))).collect();
    let mut splits: Vec<Vec<Key>> = segs.iter().map(|&(a, b)| vec![a, b]).collect();

    let mut order: Vec<usize> = (0..pts.len()).collect();
    let min_x = |i: usize| pts[i].0.x.min(pts[i].1.x);
    let max_x = |i: usize| pts[i].0.x.max(pts[i].1.x);
    order.sort_by(|&i, &j| min_x(i).total_cmp(&min_x(j)));

    for (oi, &i) in order.iter().enumerate() {
        let (a, b) = pts[i];
        let (ylo, yhi) = (a.y.min(b.y) - eps, a.y.max(b.y) + eps);
        let xhi = max_x(i) + eps;
        for &j in &order[oi + 1..] {
            if min_x(j) > xhi {
                break;
            }
            let (c, d) = pts[j];
            if c.y.max(d.y) < ylo || c.y.min(d.y) > yhi {
                continue;
            }
            // endpoints touching the other segment (covers T and collinear overlaps)
            for (p, k) in [(a, segs[i].0), (b, segs[i].1)] {
                if k != segs[j].0 && k != segs[j].1 && dist_to_segment(p, c, d) <= eps {
                    splits[j].push(k);
                }
            }
            for (p, k) in [(c, segs[j].0), (d, segs[j].1)] {
                if k != segs[i].0 && k != segs[i].1 && dist_to_segment(p, a, b) <= eps {
                    splits[i].push(k);
                }
            }
            let d1 = orient(a, b, c);
            let d2 = orient(a, b, d);
            let d3 = orient(c, d, a);
            let d4 = orient(c, d, b);
            if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
                let t = d3 / (d3 - d4);
                let k = key_of(a.lerp(b, t), grid);
                splits[i].push(k);
                splits[j].push(k);
            }
        }
    }

    let mut index: HashMap<Key, usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut seen: HashSet<(usize, usize)> = HashSet::new();
    let mut edges = Vec::new();
    let mut vid = |k: Key, vertices: &mut Vec<Point2>| -> usize {
        *index.entry(k).or_insert_with(|| {
            vertices.push(point_of(k, grid));
            vertices.len() - 1
        })
    };
    for (i, ks) in splits.iter_mut().enumerate() {
        let (a, b) = pts[i];
        let dir = b - a;
        ks.sort_by(|&k1, &k2| {
            let t1 = (point_of(k1, grid) - a).dot(dir);
            let t2 = (point_of(k2, grid) - a).dot(dir);
            t1.total_cmp(&t2)
        });
        ks.dedup();
        for w in ks.windows(2) {
            let u = vid(w[0], &mut vertices);
            let v = vid(w[1], &mut vertices);
            if u != v && seen.insert((u.min(v), u.max(v))) {
                edges.push((u, v));
            }
        }
    }
    NodedLines { vertices, edges }
}

/// A closed walk of half-edges bounding one face of an arrangement.
#[derive(Debug, Clone)]
pub struct FaceCycle {
    /// `(edge index, traversed forward)` in walk order.
    pub half_edges: Vec<(usize, bool)>,
    /// Closed coordinate ring of the walk.
    pub ring: Vec<Point2>,
    /// Positive for bounded faces (counter-clockwise), negative for the
    /// outer boundary of a connected component.
    pub signed_area: f64,
}

/// Enumerate the face cycles of a noded planar graph whose edges carry a
/// polyline path from their first to their second vertex.
pub fn trace_faces(vertex_count: usize, edges: &[(usize, usize, &[Point2])]) -> Vec<FaceCycle> {
    let nh = edges.len() * 2;
    let origin = |h: usize| if h % 2 == 0 { edges[h / 2].0 } else { edges[h / 2].1 };
    let out_dir = |h: usize| {
        let path = edges[h / 2].2;
        let n = path.len();
        if h % 2 == 0 {
            path[1] - path[0]
        } else {
            path[n - 2] - path[n - 1]
        }
    };
    let mut outgoing: Vec<Vec<(f64, usize)>> = vec![Vec::new(); vertex_count];
    for h in 0..nh {
        outgoing[origin(h)].push((out_dir(h).angle(), h));
    }
    let mut pos = vec![0usize; nh];
    for list in outgoing.iter_mut() {
        list.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for (i, &(_, h)) in list.iter().enumerate() {
            pos[h] = i;
        }
    }
    let next = |h: usize| {
        let twin = h ^ 1;
        let list = &outgoing[origin(twin)];
        let i = pos[twin];
        list[(i + list.len() - 1) % list.len()].1
    };

    let mut visited = vec![false; nh];
    let mut cycles = Vec::new();
    for start in 0..nh {
        if visited[start] {
            continue;
        }
        let mut hes = Vec::new();
        let mut ring: Vec<Point2> = Vec::new();
        let mut h = start;
        loop {
            visited[h] = true;
            let (e, fwd) = (h / 2, h % 2 == 0);
            hes.push((e, fwd));
            let path = edges[e].2;
            let iter: Box<dyn Iterator<Item = &Point2>> =
                if fwd { Box::new(path.iter()) } else { Box::new(path.iter().rev()) };
            for &p in iter {
                if ring.last() != Some(&p) {
                    ring.push(p);
                }
            }
            h = next(h);
            if h == start || visited[h] {
                break;
            }
        }
        if ring.first() != ring.last() {
            if let Some(&f) = ring.first() {
                ring.push(f);
            }
        }
        let signed_area = ring_signed_area(&ring);
        cycles.push(FaceCycle { half_edges: hes, ring, signed_area });
    }
    cycles
}

fn prune_dangles(vertex_count: usize, edges: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let mut alive = vec![true; edges.len()];
    let mut deg = vec![0usize; vertex_count];
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); vertex_count];
    for (i, &(u, v)) in edges.iter().enumerate() {
        deg[u] += 1;
        deg[v] += 1;
        incident[u].push(i);
        incident[v].push(i);
    }
    let mut stack: Vec<usize> = (0..vertex_count).filter(|&v| deg[v] == 1).collect();
    while let Some(v) = stack.pop() {
        if deg[v] != 1 {
            continue;
        }
        if let Some(&e) = incident[v].iter().find(|&&e| alive[e]) {
            alive[e] = false;
            let (a, b) = edges[e];
            for w in [a, b] {
                deg[w] -= 1;
                if deg[w] == 1 {
                    stack.push(w);
                }
            }
        }
    }
    edges.iter().zip(alive).filter(|(_, a)| *a).map(|(e, _)| *e).collect()
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Node all linework at mutual intersections and return every bounded face
/// of the resulting arrangement as a polygon. Components nested inside a
/// face become its holes; open linework contributes nothing.
pub fn build_area(parts: &[Linework], grid: f64) -> Vec<Polygon> {
    let mut segs = Vec::new();
    for p in parts {
        p.push_segments(&mut segs);
    }
    let noded = node_segments(&segs, grid);
    let edges = prune_dangles(noded.vertices.len(), &noded.edges);
    if edges.is_empty() {
        return Vec::new();
    }
    let paths: Vec<[Point2; 2]> = edges.iter().map(|&(u, v)| [noded.vertices[u], noded.vertices[v]]).collect();
    let graph: Vec<(usize, usize, &[Point2])> =
        edges.iter().zip(&paths).map(|(&(u, v), p)| (u, v, p.as_slice())).collect();
    let cycles = trace_faces(noded.vertices.len(), &graph);

    let mut parent: Vec<usize> = (0..noded.vertices.len()).collect();
    for &(u, v) in &edges {
        let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
        if ru != rv {
            parent[ru] = rv;
        }
    }
    let comp_of = |c: &FaceCycle, parent: &mut Vec<usize>| find(parent, edges[c.half_edges[0].0].0);
    let area_eps = grid * grid;
    let mut faces: Vec<(usize, &FaceCycle, Vec<Vec<Point2>>)> = Vec::new();
    let mut outers: Vec<(usize, &FaceCycle)> = Vec::new();
    for c in &cycles {
        let comp = comp_of(c, &mut parent);
        if c.signed_area > area_eps {
            faces.push((comp, c, Vec::new()));
        } else if c.signed_area < -area_eps {
            outers.push((comp, c));
        }
    }
    for (comp, outer) in outers {
        let probe = outer.ring[0];
        let host = faces
            .iter()
            .enumerate()
            .filter(|(_, (fc, f, _))| *fc != comp && ring_contains(&f.ring, probe))
            .min_by(|a, b| a.1 .1.signed_area.total_cmp(&b.1 .1.signed_area))
            .map(|(i, _)| i);
        if let Some(i) = host {
            faces[i].2.push(outer.ring.clone());
        }
    }
    faces
        .into_iter()
        .filter_map(|(_, f, holes)| Polygon::new(f.ring.clone(), holes).ok())
        .collect()
}

fn segments_touch(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    let d1 = orient(a, b, c);
    let d2 = orient(a, b, d);
    let d3 = orient(c, d, a);
    let d4 = orient(c, d, b);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    let on = |p: Point2, q: Point2, r: Point2, o: f64| {
        o == 0.0 && r.x >= p.x.min(q.x) && r.x <= p.x.max(q.x) && r.y >= p.y.min(q.y) && r.y <= p.y.max(q.y)
    };
    on(a, b, c, d1) || on(a, b, d, d2) || on(c, d, a, d3) || on(c, d, b, d4)
}

/// Whether a closed ring has no self-intersections or overlapping edges.
pub(crate) fn ring_is_simple(ring: &[Point2]) -> bool {
    let n = ring.len().saturating_sub(1);
    if n < 3 {
        return false;
    }
    let seg = |i: usize| (ring[i], ring[i + 1]);
    let mut order: Vec<usize> = (0..n).collect();
    let min_x = |i: usize| ring[i].x.min(ring[i + 1].x);
    order.sort_by(|&i, &j| min_x(i).total_cmp(&min_x(j)));
    for (oi, &i) in order.iter().enumerate() {
        let (a, b) = seg(i);
        let xhi = a.x.max(b.x);
        for &j in &order[oi + 1..] {
            if min_x(j) > xhi {
                break;
            }
            let (c, d) = seg(j);
            let adjacent = j == i + 1 || i == j + 1 || (i == 0 && j == n - 1) || (j == 0 && i == n - 1);
            if adjacent {
                // only a fold-back along the shared vertex is invalid
                let (p, q, r) = if j == (i + 1) % n { (a, b, d) } else { (c, d, b) };
                if orient(p, q, r) == 0.0 && (q - p).dot(r - q) < 0.0 {
                    return false;
                }
                continue;
            }
            if segments_touch(a, b, c, d) {
                return false;
            }
        }
    }
    true
}
