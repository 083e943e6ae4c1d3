//! Dominant ground plane detection.

use crate::geometry::Point3;
use crate::plane::{ransac_plane, PlaneModel, RansacConfig};
use crate::range_image::RangeImage;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundConfig {
    pub ransac: RansacConfig,
    /// Only points with `z <= candidate_z` seed the RANSAC search. `None`
    /// uses the `candidate_percentile` quantile of valid z values.
    pub candidate_z: Option<f64>,
    pub candidate_percentile: f64,
}

impl Default for GroundConfig {
    fn default() -> Self {
        GroundConfig { ransac: RansacConfig::default(), candidate_z: None, candidate_percentile: 0.25 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundResult {
    /// Upward-oriented unit-normal plane, `None` when no ground was found.
    pub plane: Option<PlaneModel>,
    /// Per-pixel ground flag, a subset of the valid mask.
    pub mask: Vec<bool>,
}

impl GroundResult {
    pub fn none(pixels: usize) -> Self {
        GroundResult { plane: None, mask: vec![false; pixels] }
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }
}

pub fn extract_ground(img: &RangeImage, cfg: &GroundConfig) -> crate::Result<GroundResult> {
    cfg.ransac.validate()?;
    let rays = img.geometry().rays();
    let w = img.width();
    let indices: Vec<usize> = img.valid_indices().collect();
    let points: Vec<Point3> = indices.iter().map(|&i| rays.point(i / w, i % w, img.depths()[i])).collect();
    if points.len() < 3 {
        return Ok(GroundResult::none(img.len()));
    }

    let z_cand = match cfg.candidate_z {
        Some(z) => z,
        None => {
            let mut zs: Vec<f64> = points.iter().map(|p| p.z).collect();
            zs.sort_by(f64::total_cmp);
            let q = cfg.candidate_percentile.clamp(0.0, 1.0);
            zs[((zs.len() - 1) as f64 * q).round() as usize]
        }
    };
    let candidates: Vec<Point3> = points.iter().copied().filter(|p| p.z <= z_cand).collect();
    let Some(fit) = ransac_plane(&candidates, &cfg.ransac) else {
        return Ok(GroundResult::none(img.len()));
    };

    let plane = fit.plane;
    let thr = cfg.ransac.inlier_threshold;
    let mut mask = vec![false; img.len()];
    for (&i, p) in indices.iter().zip(&points) {
        mask[i] = plane.distance(*p) <= thr;
    }
    Ok(GroundResult { plane: Some(plane), mask })
}
