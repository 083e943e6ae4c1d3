//! Static 3-d tree for exact nearest-neighbour queries.

use crate::geometry::Point3;

const LEAF_SIZE: usize = 8;

/// Points are reordered in place so that every subtree is a contiguous
/// slice; the median of a slice is its splitting point.
#[derive(Debug, Clone)]
pub struct KdTree {
    points: Vec<Point3>,
    /// Original index of each stored point.
    index: Vec<usize>,
    /// Split axis per slice, keyed by the slice's median position.
    axis: Vec<u8>,
}

fn coord(p: &Point3, axis: u8) -> f64 {
    match axis {
        0 => p.x,
        1 => p.y,
        _ => p.z,
    }
}

impl KdTree {
    pub fn new(points: &[Point3]) -> Self {
        let mut items: Vec<(Point3, usize)> = points.iter().copied().zip(0..).collect();
        let mut axis = vec![0u8; points.len()];
        build(&mut items, 0, &mut axis);
        KdTree {
            points: items.iter().map(|(p, _)| *p).collect(),
            index: items.iter().map(|(_, i)| *i).collect(),
            axis,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Index (into the construction slice) and squared distance of the
    /// nearest point; ties go to the lowest index.
    pub fn nearest(&self, q: Point3) -> Option<(usize, f64)> {
        if self.points.is_empty() {
            return None;
        }
        let mut best = (usize::MAX, f64::INFINITY);
        self.nearest_in(0, self.points.len(), q, &mut best);
        Some(best)
    }

    fn nearest_in(&self, lo: usize, hi: usize, q: Point3, best: &mut (usize, f64)) {
        if hi - lo <= LEAF_SIZE {
            for j in lo..hi {
                let d = q.dist_sq(self.points[j]);
                let i = self.index[j];
                if d < best.1 || (d == best.1 && i < best.0) {
                    *best = (i, d);
                }
            }
            return;
        }
        let mid = lo + (hi - lo) / 2;
        let ax = self.axis[mid];
        let diff = coord(&q, ax) - coord(&self.points[mid], ax);
        let d = q.dist_sq(self.points[mid]);
        let i = self.index[mid];
        if d < best.1 || (d == best.1 && i < best.0) {
            *best = (i, d);
        }
        let (near, far) = if diff <= 0.0 { ((lo, mid), (mid + 1, hi)) } else { ((mid + 1, hi), (lo, mid)) };
        self.nearest_in(near.0, near.1, q, best);
        // equality keeps tie candidates reachable
        if diff * diff <= best.1 {
            self.nearest_in(far.0, far.1, q, best);
        }
    }

    /// The `k` nearest points as `(index, squared distance)`, closest first.
    pub fn k_nearest(&self, q: Point3, k: usize) -> Vec<(usize, f64)> {
        let mut heap: Vec<(usize, f64)> = Vec::with_capacity(k + 1);
        if k > 0 && !self.points.is_empty() {
            self.knn_in(0, self.points.len(), q, k, &mut heap);
        }
        heap
    }

    fn offer(heap: &mut Vec<(usize, f64)>, k: usize, cand: (usize, f64)) {
        let worse = |a: &(usize, f64), b: &(usize, f64)| a.1 > b.1 || (a.1 == b.1 && a.0 > b.0);
        if heap.len() == k {
            if !worse(heap.last().unwrap(), &cand) {
                return;
            }
            heap.pop();
        }
        let pos = heap.iter().position(|h| worse(h, &cand)).unwrap_or(heap.len());
        heap.insert(pos, cand);
    }

    fn knn_in(&self, lo: usize, hi: usize, q: Point3, k: usize, heap: &mut Vec<(usize, f64)>) {
        if hi - lo <= LEAF_SIZE {
            for j in lo..hi {
                Self::offer(heap, k, (self.index[j], q.dist_sq(self.points[j])));
            }
            return;
        }
        let mid = lo + (hi - lo) / 2;
        let ax = self.axis[mid];
        let diff = coord(&q, ax) - coord(&self.points[mid], ax);
        Self::offer(heap, k, (self.index[mid], q.dist_sq(self.points[mid])));
        let (near, far) = if diff <= 0.0 { ((lo, mid), (mid + 1, hi)) } else { ((mid + 1, hi), (lo, mid)) };
        self.knn_in(near.0, near.1, q, k, heap);
        if heap.len() < k || diff * diff <= heap.last().unwrap().1 {
            self.knn_in(far.0, far.1, q, k, heap);
        }
    }
}

fn build(items: &mut [(Point3, usize)], offset: usize, axis: &mut [u8]) {
    if items.len() <= LEAF_SIZE {
        return;
    }
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for (p, _) in items.iter() {
        for (a, v) in p.to_array().into_iter().enumerate() {
            lo[a] = lo[a].min(v);
            hi[a] = hi[a].max(v);
        }
    }
    let ax = (0..3).max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b]))).unwrap() as u8;
    let mid = items.len() / 2;
    items.select_nth_unstable_by(mid, |a, b| coord(&a.0, ax).total_cmp(&coord(&b.0, ax)));
    axis[offset + mid] = ax;
    let (left, rest) = items.split_at_mut(mid);
    build(left, offset, axis);
    build(&mut rest[1..], offset + mid + 1, axis);
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cloud(rng: &mut ChaCha8Rng, n: usize) -> Vec<Point3> {
        (0..n)
            .map(|_| {
                Point3::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-1.0..1.0))
            })
            .collect()
    }

    #[test]
    fn matches_linear_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pts = cloud(&mut rng, 700);
        let tree = KdTree::new(&pts);
        for q in cloud(&mut rng, 200) {
            let brute = pts
                .iter()
                .enumerate()
                .map(|(i, p)| (i, q.dist_sq(*p)))
                .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
                .unwrap();
            assert_eq!(tree.nearest(q), Some(brute));

            let mut all: Vec<_> = pts.iter().enumerate().map(|(i, p)| (i, q.dist_sq(*p))).collect();
            all.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            assert_eq!(tree.k_nearest(q, 10), all[..10].to_vec());
        }
    }

    #[test]
    fn duplicates_resolve_to_lowest_index() {
        let pts = vec![Point3::new(1.0, 1.0, 1.0); 50];
        let tree = KdTree::new(&pts);
        assert_eq!(tree.nearest(Point3::ORIGIN).unwrap().0, 0);
        assert!(KdTree::new(&[]).nearest(Point3::ORIGIN).is_none());
    }
}
