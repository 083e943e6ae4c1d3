//! Reconstruction quality and rate metrics.

use nalgebra::{Matrix3, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::kdtree::KdTree;
use crate::range_image::RangeImage;
use crate::salience::SalienceMap;
use crate::segmentation::{ClusterAssignment, UNLABELED};

/// Raw point size in bits: three `f32` coordinates.
pub const RAW_BITS_PER_POINT: f64 = 96.0;
/// Default F1 distance threshold, meters.
pub const DEFAULT_TAU: f64 = 0.02;
/// Default D2 PSNR peak value, meters.
pub const DEFAULT_PEAK: f64 = 59.70;
/// Reported in place of an infinite PSNR.
pub const PSNR_CAP_DB: f64 = 200.0;
/// Neighbours used for normal estimation.
pub const NORMAL_NEIGHBORS: usize = 10;

fn check_non_empty(a: &[Point3], b: &[Point3]) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Size("metric needs two non-empty clouds".into()));
    }
    Ok(())
}

/// Distance from every point of `from` to its nearest neighbour in `to`.
pub fn nn_distances(from: &[Point3], to: &KdTree) -> Vec<f64> {
    from.par_iter().map(|p| to.nearest(*p).map_or(f64::INFINITY, |(_, d)| d.sqrt())).collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// One-directional chamfer term: mean NN distance from `a` into `b`.
pub fn chamfer(a: &[Point3], b: &[Point3]) -> Result<f64> {
    check_non_empty(a, b)?;
    Ok(mean(&nn_distances(a, &KdTree::new(b))))
}

pub fn chamfer_sym(p: &[Point3], p_hat: &[Point3]) -> Result<f64> {
    Ok((chamfer(p, p_hat)? + chamfer(p_hat, p)?) / 2.0)
}

pub fn f1_score(p: &[Point3], p_hat: &[Point3], tau: f64) -> Result<f64> {
    check_non_empty(p, p_hat)?;
    if !(tau > 0.0) {
        return Err(Error::Config("F1 threshold must be positive".into()));
    }
    let tp = nn_distances(p_hat, &KdTree::new(p)).iter().filter(|d| **d <= tau).count();
    let fp = p_hat.len() - tp;
    let fn_ = nn_distances(p, &KdTree::new(p_hat)).iter().filter(|d| **d > tau).count();
    Ok(2.0 * tp as f64 / (2 * tp + fp + fn_) as f64)
}

/// Unit normal of the least-squares plane through `points`.
fn plane_normal(points: &[Point3]) -> Point3 {
    let n = points.len() as f64;
    let c = points.iter().fold(Point3::ORIGIN, |s, p| s + *p) * (1.0 / n);
    let mut m = Matrix3::zeros();
    for p in points {
        let d = *p - c;
        let v = nalgebra::Vector3::new(d.x, d.y, d.z);
        m += v * v.transpose();
    }
    let eig = SymmetricEigen::new(m);
    let (i, _) = eig.eigenvalues.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap();
    let v = eig.eigenvectors.column(i);
    Point3::new(v[0], v[1], v[2])
}

/// Normal of every point from a plane fit over its `k` nearest neighbours
/// (the point itself included). Orientation is arbitrary.
pub fn estimate_normals(points: &[Point3], k: usize) -> Vec<Point3> {
    let tree = KdTree::new(points);
    points
        .par_iter()
        .map(|p| {
            let nbrs: Vec<Point3> = tree.k_nearest(*p, k).iter().map(|(i, _)| points[*i]).collect();
            if nbrs.len() < 3 {
                Point3::ORIGIN
            } else {
                plane_normal(&nbrs)
            }
        })
        .collect()
}

/// Mean squared point-to-plane error of `test` against `reference`, using
/// the reference normals at each nearest neighbour.
pub fn point_to_plane_mse(reference: &[Point3], normals: &[Point3], test: &[Point3]) -> Result<f64> {
    check_non_empty(reference, test)?;
    let tree = KdTree::new(reference);
    let errs: Vec<f64> = test
        .par_iter()
        .map(|q| {
            let (i, _) = tree.nearest(*q).unwrap();
            let e = (*q - reference[i]).dot(normals[i]);
            e * e
        })
        .collect();
    Ok(mean(&errs))
}

/// Point-to-plane PSNR in dB, capped at [`PSNR_CAP_DB`].
pub fn d2_psnr(p: &[Point3], p_hat: &[Point3], peak: f64) -> Result<f64> {
    check_non_empty(p, p_hat)?;
    let mse_a = point_to_plane_mse(p, &estimate_normals(p, NORMAL_NEIGHBORS), p_hat)?;
    let mse_b = point_to_plane_mse(p_hat, &estimate_normals(p_hat, NORMAL_NEIGHBORS), p)?;
    Ok(psnr_from_mse(mse_a.max(mse_b), peak))
}

pub fn psnr_from_mse(mse: f64, peak: f64) -> f64 {
    if mse <= 0.0 {
        return PSNR_CAP_DB;
    }
    (10.0 * (3.0 * peak * peak / mse).log10()).min(PSNR_CAP_DB)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateReport {
    pub bytes: usize,
    pub points: usize,
    pub bpp: f64,
    pub compression_ratio: f64,
}

pub fn rate_report(bytes: usize, points: usize) -> Result<RateReport> {
    if points == 0 {
        return Err(Error::Size("rate of an empty cloud is undefined".into()));
    }
    let bpp = 8.0 * bytes as f64 / points as f64;
    Ok(RateReport { bytes, points, bpp, compression_ratio: RAW_BITS_PER_POINT / bpp })
}

/// Radial reconstruction error of one label.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterError {
    pub label: u32,
    pub points: usize,
    pub accuracy: f64,
    pub mean_abs: f64,
    pub max_abs: f64,
}

pub fn cluster_errors(
    original: &RangeImage,
    reconstructed: &RangeImage,
    assignment: &ClusterAssignment,
    salience: &SalienceMap,
) -> Result<Vec<ClusterError>> {
    if original.valid_mask() != reconstructed.valid_mask() {
        return Err(Error::Shape("validity masks differ".into()));
    }
    let k = assignment.cluster_count() + 1;
    let mut sum = vec![0.0; k];
    let mut max = vec![0.0f64; k];
    let mut count = vec![0usize; k];
    for i in original.valid_indices() {
        let l = assignment.labels[i];
        if l == UNLABELED {
            return Err(Error::Shape(format!("valid pixel {i} has no cluster")));
        }
        let e = (original.depths()[i] - reconstructed.depths()[i]).abs();
        sum[l as usize] += e;
        max[l as usize] = max[l as usize].max(e);
        count[l as usize] += 1;
    }
    Ok((0..k)
        .filter(|l| count[*l] > 0)
        .map(|l| ClusterError {
            label: l as u32,
            points: count[l],
            accuracy: salience.accuracy(l as u32),
            mean_abs: sum[l] / count[l] as f64,
            max_abs: max[l],
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QualityReport {
    pub original_points: usize,
    pub reconstructed_points: usize,
    /// Present when the compressed size is known.
    pub rate: Option<RateReport>,
    pub tau: f64,
    pub f1: f64,
    pub cd_sym: f64,
    pub d2_psnr: f64,
    pub clusters: Vec<ClusterError>,
}

impl QualityReport {
    pub fn evaluate(p: &[Point3], p_hat: &[Point3], compressed_bytes: Option<usize>) -> Result<Self> {
        Ok(QualityReport {
            original_points: p.len(),
            reconstructed_points: p_hat.len(),
            rate: compressed_bytes.map(|b| rate_report(b, p.len())).transpose()?,
            tau: DEFAULT_TAU,
            f1: f1_score(p, p_hat, DEFAULT_TAU)?,
            cd_sym: chamfer_sym(p, p_hat)?,
            d2_psnr: d2_psnr(p, p_hat, DEFAULT_PEAK)?,
            clusters: Vec::new(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub const CSV_HEADER: [&'static str; 9] = [
        "original_points",
        "reconstructed_points",
        "bytes",
        "bpp",
        "compression_ratio",
        "tau",
        "f1",
        "cd_sym",
        "d2_psnr",
    ];

    /// Flat row matching [`Self::CSV_HEADER`]; per-cluster stats are JSON only.
    pub fn csv_row(&self) -> Vec<String> {
        let opt = |v: Option<String>| v.unwrap_or_default();
        vec![
            self.original_points.to_string(),
            self.reconstructed_points.to_string(),
            opt(self.rate.map(|r| r.bytes.to_string())),
            opt(self.rate.map(|r| r.bpp.to_string())),
            opt(self.rate.map(|r| r.compression_ratio.to_string())),
            self.tau.to_string(),
            self.f1.to_string(),
            self.cd_sym.to_string(),
            self.d2_psnr.to_string(),
        ]
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(Self::CSV_HEADER).map_err(io)?;
        w.write_record(self.csv_row()).map_err(io)?;
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv is utf-8"))
    }
}
