//! Scan-line curvature, key point extraction and per-cluster salience
//! levels for non-uniform quantization.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::range_image::RangeImage;
use crate::segmentation::{ClusterAssignment, GROUND_LABEL, UNLABELED};

/// Extra quantization step added to the base accuracy at levels 0..=3.
pub const LEVEL_ACCURACY_DELTA: [f64; 4] = [0.06, 0.04, 0.02, 0.0];

/// Lower key-point-count bound of levels 1, 2 and 3.
pub const LEVEL_THRESHOLDS: [usize; 3] = [3, 10, 30];

pub const MAX_LEVEL: u8 = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SalienceConfig {
    pub edge_threshold: f64,
    pub planar_threshold: f64,
    pub half_window: usize,
    pub max_edge_per_row: usize,
    pub max_planar_per_row: usize,
    /// Columns on each side suppressed around a selected key point.
    pub nms_window: usize,
}

impl Default for SalienceConfig {
    fn default() -> Self {
        SalienceConfig {
            edge_threshold: 0.10,
            planar_threshold: 0.002,
            half_window: 5,
            max_edge_per_row: 40,
            max_planar_per_row: 80,
            nms_window: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KeyPoint {
    #[default]
    None,
    Edge,
    Planar,
}

impl KeyPoint {
    pub fn is_key(self) -> bool {
        self != KeyPoint::None
    }
}

/// Smoothness of `scan[i]` against its valid neighbors within
/// `half_window` positions on either side. `None` when `scan[i]` is
/// missing, has zero norm, or fewer than two neighbors exist.
pub fn curvature(scan: &[Option<Point3>], i: usize, half_window: usize) -> Option<f64> {
    let p = scan.get(i).copied().flatten()?;
    let norm = p.norm();
    if norm == 0.0 {
        return None;
    }
    let lo = i.saturating_sub(half_window);
    let hi = (i + half_window).min(scan.len().saturating_sub(1));
    let mut sum = Point3::ORIGIN;
    let mut count = 0usize;
    for (j, q) in scan.iter().enumerate().take(hi + 1).skip(lo) {
        if j == i {
            continue;
        }
        if let Some(q) = q {
            sum = sum + (p - *q);
            count += 1;
        }
    }
    if count < 2 {
        return None;
    }
    Some(sum.norm() / (count as f64 * norm))
}

/// Curvature of every position of one scan line.
pub fn scan_curvatures(scan: &[Option<Point3>], half_window: usize) -> Vec<Option<f64>> {
    (0..scan.len()).map(|i| curvature(scan, i, half_window)).collect()
}

/// Edge / planar candidates of one scan before capping and suppression.
pub fn classify_candidates(curv: &[Option<f64>], cfg: &SalienceConfig) -> Vec<KeyPoint> {
    curv.iter()
        .map(|c| match c {
            Some(c) if *c >= cfg.edge_threshold => KeyPoint::Edge,
            Some(c) if *c <= cfg.planar_threshold => KeyPoint::Planar,
            _ => KeyPoint::None,
        })
        .collect()
}

/// Key points of one scan: sharpest edges first, then flattest planar
/// points, each pick suppressing `nms_window` columns either side.
pub fn select_row_key_points(curv: &[Option<f64>], cfg: &SalienceConfig) -> Vec<KeyPoint> {
    let cand = classify_candidates(curv, cfg);
    let mut out = vec![KeyPoint::None; curv.len()];
    let mut suppressed = vec![false; curv.len()];

    let mut pick = |kind: KeyPoint, cap: usize, descending: bool, suppressed: &mut Vec<bool>| {
        let mut idx: Vec<usize> = (0..cand.len()).filter(|&i| cand[i] == kind).collect();
        idx.sort_by(|&a, &b| {
            let (ca, cb) = (curv[a].unwrap(), curv[b].unwrap());
            let ord = if descending { cb.total_cmp(&ca) } else { ca.total_cmp(&cb) };
            ord.then(a.cmp(&b))
        });
        let mut taken = 0;
        for i in idx {
            if taken >= cap {
                break;
            }
            if suppressed[i] {
                continue;
            }
            out[i] = kind;
            taken += 1;
            let lo = i.saturating_sub(cfg.nms_window);
            let hi = (i + cfg.nms_window).min(suppressed.len() - 1);
            for s in &mut suppressed[lo..=hi] {
                *s = true;
            }
        }
    };
    pick(KeyPoint::Edge, cfg.max_edge_per_row, true, &mut suppressed);
    pick(KeyPoint::Planar, cfg.max_planar_per_row, false, &mut suppressed);
    out
}

/// Per-pixel key point flags for the whole image, row by row.
pub fn extract_key_points(img: &RangeImage, cfg: &SalienceConfig) -> Vec<KeyPoint> {
    let rays = img.geometry().rays();
    let w = img.width();
    let rows: Vec<Vec<KeyPoint>> = (0..img.height())
        .into_par_iter()
        .map(|row| {
            let scan: Vec<Option<Point3>> =
                (0..w).map(|col| img.get(row, col).map(|r| rays.point(row, col, r))).collect();
            let curv = scan_curvatures(&scan, cfg.half_window);
            select_row_key_points(&curv, cfg)
        })
        .collect();
    rows.into_iter().flatten().collect()
}

pub fn level_for_count(count: usize) -> u8 {
    LEVEL_THRESHOLDS.iter().filter(|t| count >= **t).count() as u8
}

pub fn accuracy_for_level(base_accuracy: f64, level: u8) -> f64 {
    base_accuracy + LEVEL_ACCURACY_DELTA[level.min(MAX_LEVEL) as usize]
}

/// Salience level and quantization accuracy per label (index 0 = ground).
#[derive(Debug, Clone, PartialEq)]
pub struct SalienceMap {
    pub base_accuracy: f64,
    pub levels: Vec<u8>,
    pub key_point_counts: Vec<usize>,
}

impl SalienceMap {
    /// Every cluster at the top level, i.e. uniform quantization.
    pub fn uniform(cluster_count: usize, base_accuracy: f64) -> Self {
        SalienceMap {
            base_accuracy,
            levels: vec![MAX_LEVEL; cluster_count + 1],
            key_point_counts: vec![0; cluster_count + 1],
        }
    }

    pub fn from_levels(levels: Vec<u8>, base_accuracy: f64) -> Self {
        let n = levels.len();
        SalienceMap { base_accuracy, levels, key_point_counts: vec![0; n] }
    }

    pub fn accuracy(&self, label: u32) -> f64 {
        accuracy_for_level(self.base_accuracy, self.levels[label as usize])
    }

    pub fn accuracies(&self) -> Vec<f64> {
        self.levels.iter().map(|l| accuracy_for_level(self.base_accuracy, *l)).collect()
    }

    pub fn distinct_levels(&self) -> usize {
        let mut seen = [false; 4];
        for l in &self.levels {
            seen[*l as usize] = true;
        }
        seen.iter().filter(|s| **s).count()
    }
}

/// Count key points per cluster and bin the counts into levels. Ground is
/// always kept at the top level.
pub fn classify_clusters(
    assignment: &ClusterAssignment,
    keys: &[KeyPoint],
    base_accuracy: f64,
) -> Result<SalienceMap> {
    if !(base_accuracy > 0.0 && base_accuracy.is_finite()) {
        return Err(Error::Config("base accuracy must be positive".into()));
    }
    let mut counts = vec![0usize; assignment.cluster_count() + 1];
    for (l, k) in assignment.labels.iter().zip(keys) {
        if *l != UNLABELED && k.is_key() {
            counts[*l as usize] += 1;
        }
    }
    let levels = counts
        .iter()
        .enumerate()
        .map(|(label, c)| if label as u32 == GROUND_LABEL { MAX_LEVEL } else { level_for_count(*c) })
        .collect();
    Ok(SalienceMap { base_accuracy, levels, key_point_counts: counts })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(points: &[(f64, f64, f64)]) -> Vec<Option<Point3>> {
        points.iter().map(|&(x, y, z)| Some(Point3::new(x, y, z))).collect()
    }

    #[test]
    fn symmetric_collinear_window_is_flat() {
        let scan: Vec<_> = (0..11).map(|i| Some(Point3::new(5.0, i as f64 * 0.125, 0.0))).collect();
        assert_eq!(curvature(&scan, 5, 5), Some(0.0));
        let scan: Vec<_> = (0..11).map(|i| Some(Point3::new(5.0, i as f64 * 0.1, 0.0))).collect();
        assert!(curvature(&scan, 5, 5).unwrap() < 1e-12);
    }

    #[test]
    fn spike_against_four_neighbors() {
        let scan =
            line(&[(1.0, 0.0, 0.0), (1.0, 0.0, 0.0), (2.0, 0.0, 0.0), (1.0, 0.0, 0.0), (1.0, 0.0, 0.0)]);
        let c = curvature(&scan, 2, 2).unwrap();
        assert!((c - 0.5).abs() <= 1e-9);
    }

    #[test]
    fn too_few_neighbors() {
        let scan = vec![None, Some(Point3::new(1.0, 0.0, 0.0)), Some(Point3::new(1.0, 0.1, 0.0)), None];
        assert_eq!(curvature(&scan, 1, 1), None);
        assert_eq!(curvature(&scan, 0, 3), None);
    }

    #[test]
    fn curvature_invariant_under_rotation_and_scale() {
        let scan =
            line(&[(4.0, -0.3, 0.1), (4.1, -0.1, 0.0), (3.0, 0.0, 0.2), (4.2, 0.1, 0.0), (4.3, 0.3, -0.1)]);
        let base = curvature(&scan, 2, 2).unwrap();
        let a = 0.7f64;
        let rotated: Vec<_> = scan
            .iter()
            .map(|p| {
                p.map(|p| Point3::new(a.cos() * p.x - a.sin() * p.y, a.sin() * p.x + a.cos() * p.y, p.z))
            })
            .collect();
        assert!((curvature(&rotated, 2, 2).unwrap() - base).abs() < 1e-12);
        let scaled: Vec<_> = scan.iter().map(|p| p.map(|p| p * 3.5)).collect();
        assert!((curvature(&scaled, 2, 2).unwrap() - base).abs() < 1e-12);
    }

    #[test]
    fn flat_row_candidates_are_planar() {
        let scan: Vec<_> = (0..40).map(|i| Some(Point3::new(10.0, i as f64 * 0.05, -1.0))).collect();
        let curv = scan_curvatures(&scan, 5);
        let cand = classify_candidates(&curv, &SalienceConfig::default());
        // interior points have symmetric windows
        for k in &cand[5..35] {
            assert_eq!(*k, KeyPoint::Planar);
        }
    }

    #[test]
    fn step_endpoints_peak() {
        let mut scan = Vec::new();
        for i in 0..20 {
            let r = if i < 10 { 5.0 } else { 8.0 };
            let t = (i as f64 * 0.5f64).to_radians();
            scan.push(Some(Point3::new(r * t.cos(), r * t.sin(), 0.0)));
        }
        let curv = scan_curvatures(&scan, 5);
        let peak_near = curv[..10]
            .iter()
            .enumerate()
            .filter_map(|(i, c)| c.map(|c| (i, c)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap()
            .0;
        let peak_far = curv[10..]
            .iter()
            .enumerate()
            .filter_map(|(i, c)| c.map(|c| (i + 10, c)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap()
            .0;
        assert_eq!(peak_near, 9);
        assert_eq!(peak_far, 10);
    }

    #[test]
    fn empty_row_has_no_keys() {
        let curv = scan_curvatures(&vec![None; 30], 5);
        assert!(select_row_key_points(&curv, &SalienceConfig::default()).iter().all(|k| !k.is_key()));
    }

    #[test]
    fn nms_and_caps() {
        let cfg = SalienceConfig { max_planar_per_row: 3, ..Default::default() };
        let curv: Vec<_> = (0..100).map(|_| Some(0.0)).collect();
        let keys = select_row_key_points(&curv, &cfg);
        let picked: Vec<_> = keys.iter().enumerate().filter(|(_, k)| k.is_key()).map(|(i, _)| i).collect();
        assert_eq!(picked, vec![0, 6, 12]);
    }

    #[test]
    fn level_bins() {
        assert_eq!(level_for_count(0), 0);
        assert_eq!(level_for_count(2), 0);
        assert_eq!(level_for_count(3), 1);
        assert_eq!(level_for_count(7), 1);
        assert_eq!(level_for_count(9), 1);
        assert_eq!(level_for_count(10), 2);
        assert_eq!(level_for_count(29), 2);
        assert_eq!(level_for_count(30), 3);
        assert_eq!(level_for_count(10_000), 3);
        assert!((accuracy_for_level(0.02, 1) - 0.06).abs() < 1e-12);
        assert!((accuracy_for_level(0.02, 0) - 0.08).abs() < 1e-12);
        assert_eq!(accuracy_for_level(0.02, 3), 0.02);
    }

    #[test]
    fn classification_counts_keys_per_cluster() {
        let assignment =
            ClusterAssignment { labels: vec![0, 1, 1, 1, 2, UNLABELED, 2], centers: vec![Point3::ORIGIN; 2] };
        let mut keys = vec![KeyPoint::Edge; 7];
        keys[3] = KeyPoint::None;
        let map = classify_clusters(&assignment, &keys, 0.02).unwrap();
        assert_eq!(map.key_point_counts, vec![1, 2, 2]);
        assert_eq!(map.levels, vec![3, 0, 0]);
        assert!((map.accuracy(1) - 0.08).abs() < 1e-12);
        assert!(classify_clusters(&assignment, &keys, 0.0).is_err());
    }
}
