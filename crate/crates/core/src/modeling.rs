//! Per-cluster point / plane models and the intra-predicted range image.

use crate::error::{Error, Result};
use crate::geometry::{Point3, RayTable, SensorGeometry};
use crate::plane::{ransac_plane, PlaneModel, RansacConfig};
use crate::range_image::RangeImage;
use crate::segmentation::{ClusterAssignment, UNLABELED};

/// Predictions beyond this range are treated like a ray missing the plane.
pub const MAX_PREDICTED_RANGE: f64 = 1000.0;

/// Plane offsets must fit the 24-bit fixed-point wire encoding.
pub const MAX_PLANE_OFFSET: f64 = 327.0;

const NORMAL_SCALE: f64 = 8_388_607.0; // 2^23 - 1
const OFFSET_SCALE: f64 = 25_600.0; // steps per meter, covers +-327.68 m
const I24_MAX: i64 = 8_388_607;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClusterModel {
    Point { range: f64 },
    Plane(PlaneModel),
}

impl ClusterModel {
    pub fn is_plane(&self) -> bool {
        matches!(self, ClusterModel::Plane(_))
    }
}

/// A cluster's model plus the mean-range value used wherever a plane ray
/// prediction is unusable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterPredictor {
    pub model: ClusterModel,
    pub fallback_range: f64,
}

impl ClusterPredictor {
    pub fn point(range: f64) -> Self {
        ClusterPredictor { model: ClusterModel::Point { range }, fallback_range: range }
    }

    /// Predicted range along `dir` and whether the fallback was used.
    #[inline]
    pub fn predict(&self, dir: Point3) -> (f64, bool) {
        match self.model {
            ClusterModel::Point { range } => (range, false),
            ClusterModel::Plane(plane) => {
                let r = plane.ray_range(dir);
                if r.is_finite() && r > 0.0 && r <= MAX_PREDICTED_RANGE {
                    (r, false)
                } else {
                    (self.fallback_range, true)
                }
            }
        }
    }

    /// The model as the decoder will see it: ranges through `f32`, plane
    /// coefficients through 24-bit fixed point.
    pub fn wire_rounded(&self) -> ClusterPredictor {
        let model = match self.model {
            ClusterModel::Point { range } => ClusterModel::Point { range: range as f32 as f64 },
            ClusterModel::Plane(p) => ClusterModel::Plane(dequantize_plane(quantize_plane(&p))),
        };
        ClusterPredictor { model, fallback_range: self.fallback_range as f32 as f64 }
    }
}

fn to_i24(v: f64) -> i32 {
    (v.round() as i64).clamp(-I24_MAX, I24_MAX) as i32
}

/// Fixed-point `[a, b, c, d]`, each fitting in a signed 24-bit integer.
pub fn quantize_plane(p: &PlaneModel) -> [i32; 4] {
    [
        to_i24(p.a * NORMAL_SCALE),
        to_i24(p.b * NORMAL_SCALE),
        to_i24(p.c * NORMAL_SCALE),
        to_i24(p.d * OFFSET_SCALE),
    ]
}

/// Inverse of [`quantize_plane`]. The normal is left as decoded (unit
/// length only to within the fixed-point step) so that re-quantizing
/// reproduces the same integers.
pub fn dequantize_plane(q: [i32; 4]) -> PlaneModel {
    PlaneModel {
        a: q[0] as f64 / NORMAL_SCALE,
        b: q[1] as f64 / NORMAL_SCALE,
        c: q[2] as f64 / NORMAL_SCALE,
        d: q[3] as f64 / OFFSET_SCALE,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelingConfig {
    /// When false every cluster uses the point model.
    pub allow_planes: bool,
    pub min_plane_points: usize,
    pub max_incidence_deg: f64,
    pub ransac: RansacConfig,
}

impl Default for ModelingConfig {
    fn default() -> Self {
        ModelingConfig {
            allow_planes: true,
            min_plane_points: 30,
            max_incidence_deg: 75.0,
            ransac: RansacConfig { iterations: 100, inlier_threshold: 0.1, seed: 0 },
        }
    }
}

pub fn mean_range(points: &[Point3]) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::Size("cannot model an empty cluster".into()));
    }
    Ok(points.iter().map(|p| p.norm()).sum::<f64>() / points.len() as f64)
}

pub fn fit_point_model(points: &[Point3]) -> Result<ClusterModel> {
    Ok(ClusterModel::Point { range: mean_range(points)? })
}

/// RANSAC plane with least-squares refit, or `None` if no non-degenerate
/// sample exists.
pub fn fit_plane_model(points: &[Point3], cfg: &RansacConfig) -> Option<ClusterModel> {
    ransac_plane(points, cfg).map(|fit| ClusterModel::Plane(fit.plane))
}

/// Largest angle, in degrees, between a viewing ray and the plane normal.
pub fn max_incidence_deg(plane: &PlaneModel, points: &[Point3]) -> f64 {
    let n = plane.normal();
    points
        .iter()
        .filter_map(|p| {
            let r = p.norm();
            (r > 0.0).then(|| (p.dot(n).abs() / r).clamp(0.0, 1.0).acos().to_degrees())
        })
        .fold(0.0, f64::max)
}

pub fn select_model(points: &[Point3], cfg: &ModelingConfig) -> Result<ClusterPredictor> {
    let mean = mean_range(points)?;
    let point = ClusterPredictor::point(mean);
    if !cfg.allow_planes || points.len() < cfg.min_plane_points {
        return Ok(point);
    }
    let Some(ClusterModel::Plane(plane)) = fit_plane_model(points, &cfg.ransac) else {
        return Ok(point);
    };
    if plane.d.abs() > MAX_PLANE_OFFSET || max_incidence_deg(&plane, points) > cfg.max_incidence_deg {
        return Ok(point);
    }
    Ok(ClusterPredictor { model: ClusterModel::Plane(plane), fallback_range: mean })
}

/// Cluster points grouped by label (index 0 = ground).
pub fn gather_clusters(img: &RangeImage, assignment: &ClusterAssignment) -> Vec<Vec<Point3>> {
    let rays = img.geometry().rays();
    let w = img.width();
    let mut groups = vec![Vec::new(); assignment.cluster_count() + 1];
    for i in img.valid_indices() {
        let l = assignment.labels[i];
        groups[l as usize].push(rays.point(i / w, i % w, img.depths()[i]));
    }
    groups
}

/// Intra-predicted image for every labelled pixel, plus one flag per
/// predictor telling whether any of its pixels needed the fallback range.
pub fn predict(
    geom: &SensorGeometry,
    assignment: &ClusterAssignment,
    predictors: &[ClusterPredictor],
) -> Result<(RangeImage, Vec<bool>)> {
    let rays = RayTable::new(geom);
    predict_with_rays(geom, &rays, assignment, predictors)
}

pub fn predict_with_rays(
    geom: &SensorGeometry,
    rays: &RayTable,
    assignment: &ClusterAssignment,
    predictors: &[ClusterPredictor],
) -> Result<(RangeImage, Vec<bool>)> {
    let mut img = RangeImage::empty(*geom);
    let mut flags = vec![false; predictors.len()];
    let w = geom.width();
    for (i, &l) in assignment.labels.iter().enumerate() {
        if l == UNLABELED {
            continue;
        }
        let pred =
            predictors.get(l as usize).ok_or_else(|| Error::Shape(format!("no model for cluster {l}")))?;
        let (r, fell_back) = pred.predict(rays.dir_at(i));
        flags[l as usize] |= fell_back;
        img.set(i / w, i % w, r);
    }
    Ok((img, flags))
}
