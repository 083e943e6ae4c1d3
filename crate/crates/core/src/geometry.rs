//! Spherical projection between Cartesian sensor-frame points and
//! range-image pixels.
//!
//! Rows index elevation from `phi_min` (row 0) to `phi_max` (row `H - 1`),
//! columns index azimuth counter-clockwise from the +x axis. All rounding
//! is half away from zero (`f64::round`), on both the encode and decode
//! side.

use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};
use crate::range_image::RangeImage;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const ORIGIN: Point3 = Point3 { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    pub fn dot(self, other: Point3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Point3) -> Point3 {
        Point3::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn dist_sq(self, other: Point3) -> f64 {
        (self - other).norm_sq()
    }

    pub fn dist(self, other: Point3) -> f64 {
        self.dist_sq(other).sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl Add for Point3 {
    type Output = Point3;
    fn add(self, o: Point3) -> Point3 {
        Point3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Point3 {
    type Output = Point3;
    fn sub(self, o: Point3) -> Point3 {
        Point3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Point3;
    fn mul(self, s: f64) -> Point3 {
        Point3::new(self.x * s, self.y * s, self.z * s)
    }
}

/// Beam layout of a spinning LiDAR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorGeometry {
    pub num_beams: usize,
    pub horizontal_resolution_deg: f64,
    pub phi_min_deg: f64,
    pub phi_max_deg: f64,
}

impl SensorGeometry {
    pub fn new(
        num_beams: usize,
        horizontal_resolution_deg: f64,
        phi_min_deg: f64,
        phi_max_deg: f64,
    ) -> Result<Self> {
        let g = SensorGeometry { num_beams, horizontal_resolution_deg, phi_min_deg, phi_max_deg };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_beams == 0 {
            return Err(Error::Config("sensor needs at least one beam".into()));
        }
        let rho = self.horizontal_resolution_deg;
        if !(rho.is_finite() && rho > 0.0 && rho <= 360.0) {
            return Err(Error::Config(format!("horizontal resolution must be in (0, 360], got {rho}")));
        }
        if !(self.phi_min_deg.is_finite()
            && self.phi_max_deg.is_finite()
            && self.phi_min_deg < self.phi_max_deg)
        {
            return Err(Error::Config(format!(
                "vertical field of view [{}, {}] is empty",
                self.phi_min_deg, self.phi_max_deg
            )));
        }
        if self.width() == 0 || self.width() > u16::MAX as usize || self.num_beams > u16::MAX as usize {
            return Err(Error::Config("range image dimensions exceed 65535".into()));
        }
        Ok(())
    }

    /// Range image width `round(360 / rho)`.
    pub fn width(&self) -> usize {
        (360.0 / self.horizontal_resolution_deg).round() as usize
    }

    pub fn height(&self) -> usize {
        self.num_beams
    }

    pub fn pixel_count(&self) -> usize {
        self.width() * self.height()
    }

    /// Elevation spacing between adjacent beams, degrees. Zero for a single beam.
    pub fn row_step_deg(&self) -> f64 {
        if self.num_beams > 1 {
            (self.phi_max_deg - self.phi_min_deg) / (self.num_beams - 1) as f64
        } else {
            0.0
        }
    }

    /// Vertical bins per degree.
    pub fn rows_per_degree(&self) -> f64 {
        if self.num_beams > 1 {
            (self.num_beams - 1) as f64 / (self.phi_max_deg - self.phi_min_deg)
        } else {
            0.0
        }
    }

    pub fn row_angle_deg(&self, row: usize) -> f64 {
        self.phi_min_deg + row as f64 * self.row_step_deg()
    }

    pub fn col_angle_deg(&self, col: usize) -> f64 {
        col as f64 * self.horizontal_resolution_deg
    }

    /// Same geometry with every parameter rounded through `f32`, the
    /// precision used on the wire.
    pub fn wire_rounded(&self) -> SensorGeometry {
        SensorGeometry {
            num_beams: self.num_beams,
            horizontal_resolution_deg: self.horizontal_resolution_deg as f32 as f64,
            phi_min_deg: self.phi_min_deg as f32 as f64,
            phi_max_deg: self.phi_max_deg as f32 as f64,
        }
    }

    pub fn rays(&self) -> RayTable {
        RayTable::new(self)
    }

    pub fn vlp16() -> Self {
        SensorGeometry {
            num_beams: 16,
            horizontal_resolution_deg: 0.2,
            phi_min_deg: -15.0,
            phi_max_deg: 15.0,
        }
    }

    pub fn hdl32e() -> Self {
        SensorGeometry {
            num_beams: 32,
            horizontal_resolution_deg: 0.16,
            phi_min_deg: -30.67,
            phi_max_deg: 10.67,
        }
    }

    pub fn hdl64e() -> Self {
        SensorGeometry {
            num_beams: 64,
            horizontal_resolution_deg: 0.18,
            phi_min_deg: -24.8,
            phi_max_deg: 2.0,
        }
    }
}

/// Integer pixel plus measured range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelCoord {
    pub row: usize,
    pub col: usize,
    pub range: f64,
}

/// Precomputed unit viewing rays at bin centers.
///
/// Encoder and decoder both derive predictions from this table, so every
/// trigonometric value is computed exactly once per geometry.
#[derive(Debug, Clone)]
pub struct RayTable {
    width: usize,
    // (cos phi, sin phi) per row
    rows: Vec<(f64, f64)>,
    // (cos theta, sin theta) per column
    cols: Vec<(f64, f64)>,
}

impl RayTable {
    pub fn new(geom: &SensorGeometry) -> Self {
        let rows = (0..geom.height())
            .map(|w| {
                let phi = geom.row_angle_deg(w).to_radians();
                (phi.cos(), phi.sin())
            })
            .collect();
        let cols = (0..geom.width())
            .map(|h| {
                let theta = geom.col_angle_deg(h).to_radians();
                (theta.cos(), theta.sin())
            })
            .collect();
        RayTable { width: geom.width(), rows, cols }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.rows.len()
    }

    /// Unit direction of pixel `(row, col)`.
    #[inline]
    pub fn dir(&self, row: usize, col: usize) -> Point3 {
        let (cp, sp) = self.rows[row];
        let (ct, st) = self.cols[col];
        Point3::new(cp * ct, cp * st, sp)
    }

    #[inline]
    pub fn dir_at(&self, index: usize) -> Point3 {
        self.dir(index / self.width, index % self.width)
    }

    #[inline]
    pub fn point(&self, row: usize, col: usize, range: f64) -> Point3 {
        let (cp, sp) = self.rows[row];
        let (ct, st) = self.cols[col];
        Point3::new(cp * ct * range, cp * st * range, sp * range)
    }
}

/// Range, azimuth in (-180, 180] and elevation in [-90, 90], degrees.
pub fn spherical_of(point: Point3) -> Result<(f64, f64, f64)> {
    if !point.is_finite() {
        return Err(Error::DegenerateInput("non-finite point".into()));
    }
    let r = point.norm();
    if r == 0.0 {
        return Err(Error::DegenerateInput("zero-norm point has no direction".into()));
    }
    let theta = point.y.atan2(point.x).to_degrees();
    let phi = (point.z / r).clamp(-1.0, 1.0).asin().to_degrees();
    Ok((r, theta, phi))
}

pub fn project(point: Point3, geom: &SensorGeometry) -> Result<PixelCoord> {
    let (r, theta, phi) = spherical_of(point)?;
    let row = row_of(phi, geom)?;
    Ok(PixelCoord { row, col: col_of(theta, geom), range: r })
}

fn row_of(phi: f64, geom: &SensorGeometry) -> Result<usize> {
    let h = geom.height();
    if h == 1 {
        let tol = 1e-9;
        if phi < geom.phi_min_deg - tol || phi > geom.phi_max_deg + tol {
            return Err(Error::OutOfFov { phi_deg: phi });
        }
        return Ok(0);
    }
    let half = 0.5 * geom.row_step_deg();
    if phi < geom.phi_min_deg - half || phi > geom.phi_max_deg + half {
        return Err(Error::OutOfFov { phi_deg: phi });
    }
    let w = ((phi - geom.phi_min_deg) * geom.rows_per_degree()).round();
    Ok((w.max(0.0) as usize).min(h - 1))
}

fn col_of(theta: f64, geom: &SensorGeometry) -> usize {
    let wrapped = theta.rem_euclid(360.0);
    let h = (wrapped / geom.horizontal_resolution_deg).round() as usize;
    h % geom.width()
}

/// Point on the bin-center ray of `(row, col)` at distance `range`.
pub fn backproject(row: usize, col: usize, range: f64, geom: &SensorGeometry) -> Point3 {
    debug_assert!(row < geom.height() && col < geom.width());
    let phi = geom.row_angle_deg(row).to_radians();
    let theta = geom.col_angle_deg(col).to_radians();
    Point3::new(phi.cos() * theta.cos() * range, phi.cos() * theta.sin() * range, phi.sin() * range)
}

/// Rasterise a cloud. Returns the image and how many input points did not
/// survive (out of view, degenerate, or shadowed by a nearer point).
pub fn cloud_to_range_image(points: &[Point3], geom: &SensorGeometry) -> Result<(RangeImage, usize)> {
    geom.validate()?;
    let mut img = RangeImage::empty(*geom);
    let mut dropped = 0;
    for p in points {
        let px = match project(*p, geom) {
            Ok(px) => px,
            Err(_) => {
                dropped += 1;
                continue;
            }
        };
        match img.get(px.row, px.col) {
            Some(existing) => {
                dropped += 1;
                if px.range < existing {
                    img.set(px.row, px.col, px.range);
                }
            }
            None => img.set(px.row, px.col, px.range),
        }
    }
    Ok((img, dropped))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hdl64() -> SensorGeometry {
        SensorGeometry::hdl64e()
    }

    #[test]
    fn spherical_axis_aligned() {
        let (r, t, p) = spherical_of(Point3::new(1.0, 0.0, 0.0)).unwrap();
        assert_eq!((r, t, p), (1.0, 0.0, 0.0));
        let (r, t, p) = spherical_of(Point3::new(1.0, 1.0, 0.0)).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
        assert!((t - 45.0).abs() < 1e-12);
        assert_eq!(p, 0.0);
    }

    #[test]
    fn spherical_three_four_five() {
        let (r, t, p) = spherical_of(Point3::new(3.0, 4.0, 0.0)).unwrap();
        assert!((r - 5.0).abs() < 1e-12);
        assert!((t - 53.1301).abs() < 1e-4);
        assert_eq!(p, 0.0);
    }

    #[test]
    fn spherical_rejects_origin() {
        assert!(matches!(spherical_of(Point3::ORIGIN), Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn project_forward_axis() {
        let g = hdl64();
        assert_eq!(g.width(), 2000);
        let px = project(Point3::new(1.0, 0.0, 0.0), &g).unwrap();
        assert_eq!(px.col, 0);
        assert_eq!(px.range, 1.0);
    }

    #[test]
    fn project_wraps_last_column() {
        let g = hdl64();
        let theta = 359.99f64.to_radians();
        let p = Point3::new(theta.cos(), theta.sin(), 0.0);
        let px = project(p, &g).unwrap();
        assert_eq!(px.col, 0);
    }

    #[test]
    fn project_out_of_fov() {
        let g = hdl64();
        assert!(matches!(project(Point3::new(1.0, 0.0, 1.0), &g), Err(Error::OutOfFov { .. })));
        assert!(project(Point3::ORIGIN, &g).is_err());
    }

    #[test]
    fn backproject_axes() {
        let g = SensorGeometry::new(5, 1.0, -2.0, 2.0).unwrap();
        let p = backproject(2, 0, 5.0, &g);
        assert!((p.x - 5.0).abs() < 1e-12 && p.y.abs() < 1e-12 && p.z.abs() < 1e-12);
        let p = backproject(2, 90, 2.0, &g);
        assert!(p.x.abs() < 1e-12 && (p.y - 2.0).abs() < 1e-12 && p.z.abs() < 1e-12);
        let rays = g.rays();
        assert_eq!(rays.point(2, 90, 2.0), p);
    }

    #[test]
    fn bin_center_rays_round_trip() {
        let g = hdl64();
        for row in [0, 7, 31, 63] {
            for col in [0, 1, 999, 1999] {
                let r = 13.7;
                let px = project(backproject(row, col, r, &g), &g).unwrap();
                assert_eq!((px.row, px.col), (row, col));
                assert!((px.range - r).abs() <= 1e-9 * r);
            }
        }
    }

    #[test]
    fn raster_empty_single_and_collision() {
        let g = hdl64();
        let (img, dropped) = cloud_to_range_image(&[], &g).unwrap();
        assert_eq!((img.valid_count(), dropped), (0, 0));

        let (img, dropped) = cloud_to_range_image(&[Point3::new(1.0, 0.0, 0.0)], &g).unwrap();
        assert_eq!((img.valid_count(), dropped), (1, 0));

        let pts = [Point3::new(3.0, 0.0, 0.0), Point3::new(2.0, 0.0, 0.0)];
        let (img, dropped) = cloud_to_range_image(&pts, &g).unwrap();
        assert_eq!(img.valid_count(), 1);
        assert_eq!(dropped, 1);
        let px = project(pts[0], &g).unwrap();
        assert_eq!(img.get(px.row, px.col), Some(2.0));
    }

    #[test]
    fn geometry_validation() {
        assert!(SensorGeometry::new(0, 0.2, -1.0, 1.0).is_err());
        assert!(SensorGeometry::new(16, 0.0, -1.0, 1.0).is_err());
        assert!(SensorGeometry::new(16, 0.2, 1.0, 1.0).is_err());
        assert!(SensorGeometry::new(1, 360.0, -1.0, 1.0).is_ok());
    }
}
