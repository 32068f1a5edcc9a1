use std::collections::HashMap;

use super::BBox;

/// Uniform-grid spatial hash over bounding boxes.
#[derive(Debug, Clone)]
pub struct GridIndex {
    cell: f64,
    cells: HashMap<(i64, i64), Vec<usize>>,
    boxes: Vec<BBox>,
}

impl GridIndex {
    pub fn new(cell: f64) -> Self {
        let cell = if cell.is_finite() && cell > 0.0 { cell } else { 1.0 };
        GridIndex { cell, cells: HashMap::new(), boxes: Vec::new() }
    }

    /// Cell size adapted to a set of boxes: their mean extent, at least `min_cell`.
    pub fn with_boxes(boxes: impl IntoIterator<Item = BBox>, min_cell: f64) -> Self {
        let boxes: Vec<BBox> = boxes.into_iter().collect();
        let mean = if boxes.is_empty() {
            1.0
        } else {
            boxes.iter().map(|b| (b.max.x - b.min.x).max(b.max.y - b.min.y)).sum::<f64>() / boxes.len() as f64
        };
        let mut idx = GridIndex::new(mean.max(min_cell));
        for b in boxes {
            idx.insert(b);
        }
        idx
    }

    fn range(&self, b: &BBox) -> (i64, i64, i64, i64) {
        let f = |v: f64| (v / self.cell).floor() as i64;
        (f(b.min.x), f(b.max.x), f(b.min.y), f(b.max.y))
    }

    /// Insert a box; returns its index.
    pub fn insert(&mut self, b: BBox) -> usize {
        let id = self.boxes.len();
        let (x0, x1, y0, y1) = self.range(&b);
        for i in x0..=x1 {
            for j in y0..=y1 {
                self.cells.entry((i, j)).or_default().push(id);
            }
        }
        self.boxes.push(b);
        id
    }

    /// Indices of the boxes intersecting `b`, ascending and without duplicates.
    pub fn query(&self, b: &BBox) -> Vec<usize> {
        let (x0, x1, y0, y1) = self.range(b);
        let mut out = Vec::new();
        for i in x0..=x1 {
            for j in y0..=y1 {
                if let Some(ids) = self.cells.get(&(i, j)) {
                    out.extend(ids.iter().copied().filter(|&k| self.boxes[k].intersects(b)));
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::super::Point2;
    use super::*;

    fn bb(x0: f64, y0: f64, x1: f64, y1: f64) -> BBox {
        BBox { min: Point2::new(x0, y0), max: Point2::new(x1, y1) }
    }

    #[test]
    fn query_matches_brute_force() {
        let boxes: Vec<BBox> = (0..50)
            .map(|i| {
                let x = (i * 7 % 23) as f64;
                let y = (i * 11 % 17) as f64;
                bb(x, y, x + (i % 4) as f64, y + 1.5)
            })
            .collect();
        let idx = GridIndex::with_boxes(boxes.clone(), 0.5);
        let q = bb(3.0, 2.0, 9.0, 6.0);
        let brute: Vec<usize> = (0..boxes.len()).filter(|&i| boxes[i].intersects(&q)).collect();
        assert_eq!(idx.query(&q), brute);
    }
}
