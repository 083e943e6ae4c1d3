//! Region segmentation of non-ground points.
//!
//! The codec path uses farthest point sampling to pick region centers and
//! assigns every point to its nearest center. DBSCAN is kept for the
//! segmentation ablation.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::range_image::RangeImage;

pub const GROUND_LABEL: u32 = 0;
pub const UNLABELED: u32 = u32::MAX;

/// Per-pixel cluster labels: `0` ground, `1..=K` regions, [`UNLABELED`]
/// on invalid pixels. `centers[k - 1]` belongs to region `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    pub labels: Vec<u32>,
    pub centers: Vec<Point3>,
}

impl ClusterAssignment {
    pub fn cluster_count(&self) -> usize {
        self.centers.len()
    }

    /// Number of pixels per label, index 0 being ground.
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.centers.len() + 1];
        for &l in &self.labels {
            if l != UNLABELED {
                sizes[l as usize] += 1;
            }
        }
        sizes
    }
}

/// Index of the center nearest to `p`; ties go to the lower index.
#[inline]
pub fn nearest_center(p: Point3, centers: &[Point3]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in centers.iter().enumerate() {
        let d = p.dist_sq(*c);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

/// Greedy farthest point sampling starting from `seed_index`. Returns input
/// indices in selection order.
pub fn fps_indices(points: &[Point3], k: usize, seed_index: usize) -> Result<Vec<usize>> {
    if k == 0 || k > points.len() {
        return Err(Error::Size(format!("cannot sample {k} centers from {} points", points.len())));
    }
    if seed_index >= points.len() {
        return Err(Error::Size(format!("seed index {seed_index} out of range")));
    }
    let mut chosen = Vec::with_capacity(k);
    let mut min_d: Vec<f64> = points.iter().map(|p| p.dist_sq(points[seed_index])).collect();
    chosen.push(seed_index);
    while chosen.len() < k {
        let mut best = 0;
        let mut best_d = f64::NEG_INFINITY;
        for (i, d) in min_d.iter().enumerate() {
            if *d > best_d {
                best_d = *d;
                best = i;
            }
        }
        chosen.push(best);
        let c = points[best];
        for (d, p) in min_d.iter_mut().zip(points) {
            let nd = p.dist_sq(c);
            if nd < *d {
                *d = nd;
            }
        }
    }
    Ok(chosen)
}

pub fn fps_centers(points: &[Point3], k: usize, seed_index: usize) -> Result<Vec<Point3>> {
    Ok(fps_indices(points, k, seed_index)?.into_iter().map(|i| points[i]).collect())
}

/// Index of the point closest to the sensor origin (ties: lowest index).
pub fn nearest_to_origin(points: &[Point3]) -> usize {
    nearest_center(Point3::ORIGIN, points)
}

/// Label every valid non-ground pixel with its nearest center. `centers`
/// may be empty only if every valid pixel is ground.
pub fn assign(img: &RangeImage, ground_mask: &[bool], centers: &[Point3]) -> ClusterAssignment {
    let rays = img.geometry().rays();
    let w = img.width();
    let labels = (0..img.len())
        .into_par_iter()
        .map(|i| {
            if !img.valid_mask()[i] {
                UNLABELED
            } else if ground_mask[i] || centers.is_empty() {
                GROUND_LABEL
            } else {
                let p = rays.point(i / w, i % w, img.depths()[i]);
                nearest_center(p, centers) as u32 + 1
            }
        })
        .collect();
    ClusterAssignment { labels, centers: centers.to_vec() }
}

/// Full FPS segmentation of the non-ground pixels of `img`. At most
/// `max_fps_points` points (a uniform stride subsample) drive the center
/// search.
pub fn segment_fps(
    img: &RangeImage,
    ground_mask: &[bool],
    k: usize,
    max_fps_points: usize,
) -> Result<ClusterAssignment> {
    let rays = img.geometry().rays();
    let w = img.width();
    let points: Vec<Point3> = img
        .valid_indices()
        .filter(|&i| !ground_mask[i])
        .map(|i| rays.point(i / w, i % w, img.depths()[i]))
        .collect();
    if points.is_empty() || k == 0 {
        return Ok(assign(img, ground_mask, &[]));
    }
    let stride = points.len().div_ceil(max_fps_points.max(1));
    let sample: Vec<Point3> = points.iter().step_by(stride).copied().collect();
    let k = k.min(sample.len());
    let centers = fps_centers(&sample, k, nearest_to_origin(&sample))?;
    Ok(assign(img, ground_mask, &centers))
}

/// Raw DBSCAN output per point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DbscanLabel {
    Noise,
    Cluster(u32),
}

struct Grid {
    cell: f64,
    cells: HashMap<(i64, i64, i64), Vec<usize>>,
}

impl Grid {
    fn new(points: &[Point3], cell: f64) -> Self {
        let mut cells: HashMap<_, Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells.entry(Self::key(*p, cell)).or_default().push(i);
        }
        Grid { cell, cells }
    }

    fn key(p: Point3, cell: f64) -> (i64, i64, i64) {
        ((p.x / cell).floor() as i64, (p.y / cell).floor() as i64, (p.z / cell).floor() as i64)
    }

    fn neighbors(&self, points: &[Point3], i: usize, eps_sq: f64, out: &mut Vec<usize>) {
        out.clear();
        let p = points[i];
        let (kx, ky, kz) = Self::key(p, self.cell);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(bucket) = self.cells.get(&(kx + dx, ky + dy, kz + dz)) {
                        out.extend(bucket.iter().copied().filter(|&j| points[j].dist_sq(p) <= eps_sq));
                    }
                }
            }
        }
        out.sort_unstable();
    }
}

/// Classic DBSCAN, visiting points and neighbor lists in index order so the
/// labelling is deterministic.
pub fn dbscan(points: &[Point3], eps: f64, min_pts: usize) -> Result<Vec<DbscanLabel>> {
    if !(eps > 0.0 && eps.is_finite()) || min_pts == 0 {
        return Err(Error::Config("DBSCAN needs eps > 0 and min_pts >= 1".into()));
    }
    let grid = Grid::new(points, eps);
    let eps_sq = eps * eps;
    let mut labels: Vec<Option<DbscanLabel>> = vec![None; points.len()];
    let mut next = 0u32;
    let mut nbrs = Vec::new();
    let mut inner = Vec::new();
    for p in 0..points.len() {
        if labels[p].is_some() {
            continue;
        }
        grid.neighbors(points, p, eps_sq, &mut nbrs);
        if nbrs.len() < min_pts {
            labels[p] = Some(DbscanLabel::Noise);
            continue;
        }
        let id = next;
        next += 1;
        labels[p] = Some(DbscanLabel::Cluster(id));
        let mut queue: Vec<usize> = nbrs.iter().copied().filter(|&q| q != p).collect();
        let mut head = 0;
        while head < queue.len() {
            let q = queue[head];
            head += 1;
            match labels[q] {
                Some(DbscanLabel::Noise) => {
                    labels[q] = Some(DbscanLabel::Cluster(id));
                    continue;
                }
                Some(DbscanLabel::Cluster(_)) => continue,
                None => {}
            }
            labels[q] = Some(DbscanLabel::Cluster(id));
            grid.neighbors(points, q, eps_sq, &mut inner);
            if inner.len() >= min_pts {
                queue.extend(
                    inner
                        .iter()
                        .copied()
                        .filter(|&j| labels[j].is_none() || labels[j] == Some(DbscanLabel::Noise)),
                );
            }
        }
    }
    Ok(labels.into_iter().map(|l| l.unwrap_or(DbscanLabel::Noise)).collect())
}

/// DBSCAN segmentation of the non-ground pixels. Noise points become
/// singleton clusters; centers are cluster centroids.
pub fn dbscan_baseline(
    img: &RangeImage,
    ground_mask: &[bool],
    eps: f64,
    min_pts: usize,
) -> Result<ClusterAssignment> {
    let rays = img.geometry().rays();
    let w = img.width();
    let idx: Vec<usize> = img.valid_indices().filter(|&i| !ground_mask[i]).collect();
    let points: Vec<Point3> = idx.iter().map(|&i| rays.point(i / w, i % w, img.depths()[i])).collect();
    let raw = dbscan(&points, eps, min_pts)?;

    let dense = raw
        .iter()
        .filter_map(|l| match l {
            DbscanLabel::Cluster(c) => Some(*c + 1),
            DbscanLabel::Noise => None,
        })
        .max()
        .unwrap_or(0);
    let mut labels: Vec<u32> =
        img.valid_mask().iter().map(|v| if *v { GROUND_LABEL } else { UNLABELED }).collect();
    let mut next_singleton = dense;
    for (&i, l) in idx.iter().zip(&raw) {
        labels[i] = match l {
            DbscanLabel::Cluster(c) => c + 1,
            DbscanLabel::Noise => {
                next_singleton += 1;
                next_singleton
            }
        };
    }
    let k = next_singleton as usize;
    let mut sums = vec![(Point3::ORIGIN, 0usize); k];
    for (&i, p) in idx.iter().zip(&points) {
        let s = &mut sums[labels[i] as usize - 1];
        s.0 = s.0 + *p;
        s.1 += 1;
    }
    let centers = sums.into_iter().map(|(s, n)| s * (1.0 / n as f64)).collect();
    Ok(ClusterAssignment { labels, centers })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SensorGeometry;

    #[test]
    fn fps_single_and_max_min() {
        let pts = [Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 0.0, 0.0), Point3::new(10.0, 0.0, 0.0)];
        assert_eq!(fps_centers(&pts, 1, 1).unwrap(), vec![pts[1]]);
        assert_eq!(fps_centers(&pts, 2, 0).unwrap()[1], pts[2]);
        let mut all = fps_indices(&pts, 3, 0).unwrap();
        all.sort();
        assert_eq!(all, vec![0, 1, 2]);
        assert!(matches!(fps_centers(&pts, 4, 0), Err(Error::Size(_))));
    }

    #[test]
    fn nearest_center_tie_goes_low() {
        let centers = [Point3::new(-1.0, 0.0, 0.0), Point3::new(1.0, 0.0, 0.0)];
        assert_eq!(nearest_center(Point3::new(0.0, 5.0, 0.0), &centers), 0);
    }

    #[test]
    fn single_center_labels_everything_one() {
        let geom = SensorGeometry::new(4, 10.0, -3.0, 3.0).unwrap();
        let mut img = RangeImage::empty(geom);
        for c in 0..geom.width() {
            img.set(1, c, 5.0 + c as f64);
        }
        let ground = vec![false; img.len()];
        let a = assign(&img, &ground, &[Point3::new(1.0, 1.0, 1.0)]);
        for i in 0..img.len() {
            let expect = if img.valid_mask()[i] { 1 } else { UNLABELED };
            assert_eq!(a.labels[i], expect);
        }
    }

    #[test]
    fn dbscan_two_groups() {
        let mut pts = Vec::new();
        for i in 0..10 {
            pts.push(Point3::new(i as f64 * 0.1, 0.0, 0.0));
            pts.push(Point3::new(20.0 + i as f64 * 0.1, 0.0, 0.0));
        }
        let labels = dbscan(&pts, 2.0, 3).unwrap();
        assert_eq!(labels[0], DbscanLabel::Cluster(0));
        assert_eq!(labels[1], DbscanLabel::Cluster(1));
        assert!(labels.iter().all(|l| matches!(l, DbscanLabel::Cluster(0 | 1))));
    }

    #[test]
    fn dbscan_one_dense_group() {
        let pts: Vec<_> = (0..6).map(|i| Point3::new(0.1 * i as f64, 0.0, 0.0)).collect();
        let labels = dbscan(&pts, 2.0, 6).unwrap();
        assert!(labels.iter().all(|l| *l == DbscanLabel::Cluster(0)));
        assert!(dbscan(&pts, 0.0, 1).is_err());
    }
}
