//! Plane primitives shared by ground extraction and cluster modeling.

use nalgebra::{Matrix3, SymmetricEigen};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::geometry::Point3;

/// `a*x + b*y + c*z + d = 0` with `(a, b, c)` of unit length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneModel {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl PlaneModel {
    /// Normalises the normal and orients it canonically (`c >= 0`, then
    /// `b >= 0`, then `a >= 0`). Returns `None` for a zero normal.
    pub fn from_normal(normal: Point3, d: f64) -> Option<PlaneModel> {
        let n = normal.norm();
        if !(n.is_finite() && n > 0.0 && d.is_finite()) {
            return None;
        }
        let mut p = PlaneModel { a: normal.x / n, b: normal.y / n, c: normal.z / n, d: d / n };
        let flip = p.c < 0.0 || (p.c == 0.0 && (p.b < 0.0 || (p.b == 0.0 && p.a < 0.0)));
        if flip {
            p = PlaneModel { a: -p.a, b: -p.b, c: -p.c, d: -p.d };
        }
        Some(p)
    }

    pub fn through_point(normal: Point3, on_plane: Point3) -> Option<PlaneModel> {
        let n = normal.norm();
        if !(n > 0.0) {
            return None;
        }
        let unit = normal * (1.0 / n);
        PlaneModel::from_normal(unit, -unit.dot(on_plane))
    }

    pub fn normal(&self) -> Point3 {
        Point3::new(self.a, self.b, self.c)
    }

    pub fn signed_distance(&self, p: Point3) -> f64 {
        self.a * p.x + self.b * p.y + self.c * p.z + self.d
    }

    pub fn distance(&self, p: Point3) -> f64 {
        self.signed_distance(p).abs()
    }

    /// Range along unit ray `dir` at which it meets the plane; may be
    /// negative or non-finite when the ray misses.
    #[inline]
    pub fn ray_range(&self, dir: Point3) -> f64 {
        -self.d / (self.a * dir.x + self.b * dir.y + self.c * dir.z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RansacConfig {
    pub iterations: usize,
    pub inlier_threshold: f64,
    pub seed: u64,
}

impl Default for RansacConfig {
    fn default() -> Self {
        RansacConfig { iterations: 100, inlier_threshold: 0.15, seed: 0 }
    }
}

impl RansacConfig {
    pub fn validate(&self) -> crate::Result<()> {
        if self.iterations == 0 {
            return Err(crate::Error::Config("RANSAC needs at least one iteration".into()));
        }
        if !(self.inlier_threshold > 0.0 && self.inlier_threshold.is_finite()) {
            return Err(crate::Error::Config("RANSAC inlier threshold must be positive".into()));
        }
        Ok(())
    }
}

pub fn plane_from_three(p0: Point3, p1: Point3, p2: Point3) -> Option<PlaneModel> {
    let e1 = p1 - p0;
    let e2 = p2 - p0;
    let n = e1.cross(e2);
    let scale = e1.norm() * e2.norm();
    if !(scale > 0.0) || n.norm() <= 1e-10 * scale {
        return None;
    }
    PlaneModel::through_point(n, p0)
}

pub fn centroid(points: &[Point3]) -> Point3 {
    let sum = points.iter().fold(Point3::ORIGIN, |acc, p| acc + *p);
    sum * (1.0 / points.len() as f64)
}

/// Total least-squares plane (smallest principal axis of the scatter).
pub fn fit_least_squares(points: &[Point3]) -> Option<PlaneModel> {
    if points.len() < 3 {
        return None;
    }
    let c = centroid(points);
    let mut cov = Matrix3::<f64>::zeros();
    for p in points {
        let d = *p - c;
        let v = nalgebra::Vector3::new(d.x, d.y, d.z);
        cov += v * v.transpose();
    }
    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let ev = eig.eigenvalues;
    // rank < 2 means the points are collinear (or coincident)
    if !(ev[order[1]] > 1e-12 * ev[order[2]].max(f64::MIN_POSITIVE)) {
        return None;
    }
    let n = eig.eigenvectors.column(order[0]);
    PlaneModel::through_point(Point3::new(n[0], n[1], n[2]), c)
}

/// Outcome of a RANSAC search.
#[derive(Debug, Clone)]
pub struct RansacFit {
    pub plane: PlaneModel,
    /// Indices (into the input slice) within threshold of `plane`.
    pub inliers: Vec<usize>,
}

/// Best-consensus plane over `points`, refit by least squares over its
/// inliers. `None` when every sample was degenerate.
pub fn ransac_plane(points: &[Point3], cfg: &RansacConfig) -> Option<RansacFit> {
    let n = points.len();
    if n < 3 {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let thr = cfg.inlier_threshold;
    let mut best: Option<(usize, PlaneModel)> = None;
    for _ in 0..cfg.iterations {
        let i0 = rng.gen_range(0..n);
        let mut i1 = rng.gen_range(0..n - 1);
        if i1 >= i0 {
            i1 += 1;
        }
        let mut i2 = rng.gen_range(0..n - 2);
        let (lo, hi) = if i0 < i1 { (i0, i1) } else { (i1, i0) };
        if i2 >= lo {
            i2 += 1;
        }
        if i2 >= hi {
            i2 += 1;
        }
        let Some(plane) = plane_from_three(points[i0], points[i1], points[i2]) else {
            continue;
        };
        let count = points.iter().filter(|p| plane.distance(**p) <= thr).count();
        if best.is_none_or(|(c, _)| count > c) {
            best = Some((count, plane));
        }
    }
    let (_, plane) = best?;
    let inliers: Vec<usize> = (0..n).filter(|&i| plane.distance(points[i]) <= thr).collect();
    let subset: Vec<Point3> = inliers.iter().map(|&i| points[i]).collect();
    let refit = fit_least_squares(&subset).unwrap_or(plane);
    Some(RansacFit { plane: refit, inliers })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_point_plane() {
        let p = plane_from_three(
            Point3::new(0.0, 0.0, -2.0),
            Point3::new(1.0, 0.0, -2.0),
            Point3::new(0.0, 1.0, -2.0),
        )
        .unwrap();
        assert!((p.c - 1.0).abs() < 1e-12);
        assert!((p.d - 2.0).abs() < 1e-12);
        assert!(plane_from_three(
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(2.0, 0.0, 0.0)
        )
        .is_none());
    }

    #[test]
    fn least_squares_recovers_exact_plane() {
        let truth = PlaneModel::from_normal(Point3::new(1.0, 2.0, 3.0), -4.0).unwrap();
        let mut pts = Vec::new();
        for i in 0..10 {
            for j in 0..10 {
                let x = i as f64 * 0.3;
                let y = j as f64 * 0.2 - 1.0;
                let z = -(truth.a * x + truth.b * y + truth.d) / truth.c;
                pts.push(Point3::new(x, y, z));
            }
        }
        let fit = fit_least_squares(&pts).unwrap();
        assert!((fit.a - truth.a).abs() < 1e-9);
        assert!((fit.d - truth.d).abs() < 1e-9);
        assert!(pts.iter().all(|p| fit.distance(*p) < 1e-9));
    }

    #[test]
    fn ray_range_axis_aligned() {
        let plane = PlaneModel { a: 0.0, b: 0.0, c: 1.0, d: 2.0 };
        let phi = (-30f64).to_radians();
        let dir = Point3::new(phi.cos(), 0.0, phi.sin());
        assert!((plane.ray_range(dir) - 4.0).abs() < 1e-12);
    }
}
