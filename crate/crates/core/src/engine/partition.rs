use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::EngineError;
use crate::geom::{Point2, Polyline};
use crate::network::{AxisId, Topology};

/// Length weighted centroid of a polyline.
pub fn axis_centroid(line: &Polyline) -> Point2 {
    let mut acc = Point2::default();
    let mut total = 0.0;
    for (a, b) in line.segments() {
        let l = a.dist(b);
        acc = acc + a.midpoint(b) * l;
        total += l;
    }
    if total > 0.0 {
        acc * (1.0 / total)
    } else {
        line.first()
    }
}

fn nearest(p: Point2, centers: &[Point2]) -> usize {
    let mut best = 0;
    for (j, c) in centers.iter().enumerate() {
        if p.dist(*c) < p.dist(centers[best]) {
            best = j;
        }
    }
    best
}

/// Lloyd iterations from a seeded farthest-point start. Returns a label per
/// point; every cluster is non-empty when `k <= points.len()`.
pub fn kmeans(points: &[Point2], k: usize, seed: u64, max_iter: usize) -> Result<Vec<usize>, EngineError> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(EngineError::InvalidParameter(format!("k = {k} must be in [1, {n}]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = vec![rng.random_range(0..n)];
    let mut mind: Vec<f64> = points.iter().map(|p| p.dist(points[chosen[0]])).collect();
    while chosen.len() < k {
        let next = (0..n)
            .filter(|i| !chosen.contains(i))
            .fold(None::<usize>, |b, i| match b {
                Some(b) if mind[b] >= mind[i] => Some(b),
                _ => Some(i),
            })
            .expect("k <= n leaves a candidate");
        chosen.push(next);
        for (i, p) in points.iter().enumerate() {
            mind[i] = mind[i].min(p.dist(points[next]));
        }
    }
    let mut centers: Vec<Point2> = chosen.iter().map(|&i| points[i]).collect();
    let mut labels = vec![usize::MAX; n];
    for _ in 0..max_iter.max(1) {
        let mut next: Vec<usize> = points.iter().map(|p| nearest(*p, &centers)).collect();
        let mut sizes = vec![0usize; k];
        next.iter().for_each(|&l| sizes[l] += 1);
        for j in 0..k {
            if sizes[j] > 0 {
                continue;
            }
            // refill an empty cluster with the worst fitted point of a shared cluster
            let steal = (0..n)
                .filter(|&i| sizes[next[i]] > 1)
                .fold(None::<usize>, |b, i| match b {
                    Some(b) if points[b].dist(centers[next[b]]) >= points[i].dist(centers[next[i]]) => Some(b),
                    _ => Some(i),
                })
                .expect("more points than clusters");
            sizes[next[steal]] -= 1;
            next[steal] = j;
            sizes[j] = 1;
            centers[j] = points[steal];
        }
        if next == labels {
            break;
        }
        labels = next;
        let mut sums = vec![(Point2::default(), 0usize); k];
        for (i, &l) in labels.iter().enumerate() {
            sums[l].0 = sums[l].0 + points[i];
            sums[l].1 += 1;
        }
        for (j, (s, c)) in sums.into_iter().enumerate() {
            centers[j] = s * (1.0 / c as f64);
        }
    }
    Ok(labels)
}

/// Split the axes into `k` spatially compact groups by k-means over their
/// centroids.
pub fn partition_axes(topo: &Topology, k: usize, seed: u64, max_iter: usize) -> Result<Vec<Vec<AxisId>>, EngineError> {
    let ids: Vec<&AxisId> = topo.axes.keys().collect();
    let pts: Vec<Point2> = topo.axes.values().map(|a| axis_centroid(&a.geometry)).collect();
    let labels = kmeans(&pts, k, seed, max_iter)?;
    let mut out = vec![Vec::new(); k];
    for (id, l) in ids.into_iter().zip(labels) {
        out[l].push(id.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centroid_weights_by_length() {
        let l = Polyline::new(vec![Point2::new(0.0, 0.0), Point2::new(3.0, 0.0), Point2::new(3.0, 1.0)]).unwrap();
        let c = axis_centroid(&l);
        assert!((c.x - (1.5 * 3.0 + 3.0) / 4.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_k() {
        let pts: Vec<Point2> = (0..5).map(|i| Point2::new(i as f64, 0.0)).collect();
        assert!(kmeans(&pts, 1, 1, 50).unwrap().iter().all(|&l| l == 0));
        let mut single = kmeans(&pts, 5, 1, 50).unwrap();
        single.sort();
        assert_eq!(single, vec![0, 1, 2, 3, 4]);
        assert!(kmeans(&pts, 6, 1, 50).is_err());
        assert!(kmeans(&pts, 0, 1, 50).is_err());
    }

    #[test]
    fn duplicates_still_fill_clusters() {
        let pts = vec![Point2::new(1.0, 1.0); 4];
        let mut l = kmeans(&pts, 4, 3, 50).unwrap();
        l.sort();
        assert_eq!(l, vec![0, 1, 2, 3]);
    }
}
