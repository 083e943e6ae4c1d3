use crate::error::{Error, Result};
use crate::geometry::{Point3, SensorGeometry};

/// Depth value written into pixels that hold no return. The validity mask
/// is authoritative; this is only what `depths` contains there.
pub const EMPTY_DEPTH: f64 = 0.0;

/// H x W grid of radial depths with a validity mask, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeImage {
    geom: SensorGeometry,
    depths: Vec<f64>,
    valid: Vec<bool>,
}

impl RangeImage {
    pub fn empty(geom: SensorGeometry) -> Self {
        let n = geom.pixel_count();
        RangeImage { geom, depths: vec![EMPTY_DEPTH; n], valid: vec![false; n] }
    }

    /// Build from a dense depth grid; `valid` must be the same length.
    pub fn from_parts(geom: SensorGeometry, depths: Vec<f64>, valid: Vec<bool>) -> Result<Self> {
        let n = geom.pixel_count();
        if depths.len() != n || valid.len() != n {
            return Err(Error::Shape(format!(
                "expected {n} pixels, got {} depths and {} mask entries",
                depths.len(),
                valid.len()
            )));
        }
        let mut img = RangeImage { geom, depths, valid };
        for i in 0..n {
            if img.valid[i] {
                let d = img.depths[i];
                if !(d.is_finite() && d >= 0.0) {
                    return Err(Error::DegenerateInput(format!("pixel {i} has depth {d}")));
                }
            } else {
                img.depths[i] = EMPTY_DEPTH;
            }
        }
        Ok(img)
    }

    pub fn geometry(&self) -> &SensorGeometry {
        &self.geom
    }

    pub fn width(&self) -> usize {
        self.geom.width()
    }

    pub fn height(&self) -> usize {
        self.geom.height()
    }

    pub fn len(&self) -> usize {
        self.depths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.depths.is_empty()
    }

    pub fn depths(&self) -> &[f64] {
        &self.depths
    }

    pub fn valid_mask(&self) -> &[bool] {
        &self.valid
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.width() + col
    }

    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        let i = self.index(row, col);
        self.valid[i].then_some(self.depths[i])
    }

    pub fn get_index(&self, i: usize) -> Option<f64> {
        self.valid[i].then_some(self.depths[i])
    }

    /// Mark `(row, col)` valid with depth `range`.
    pub fn set(&mut self, row: usize, col: usize, range: f64) {
        let i = self.index(row, col);
        self.depths[i] = range;
        self.valid[i] = true;
    }

    pub fn clear(&mut self, row: usize, col: usize) {
        let i = self.index(row, col);
        self.depths[i] = EMPTY_DEPTH;
        self.valid[i] = false;
    }

    /// Indices of valid pixels, row-major.
    pub fn valid_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.valid.iter().enumerate().filter(|(_, v)| **v).map(|(i, _)| i)
    }

    fn check_compatible(&self, other_geom: &SensorGeometry, other_valid: &[bool]) -> Result<()> {
        if self.geom != *other_geom {
            return Err(Error::Shape("sensor geometry differs".into()));
        }
        if self.valid != other_valid {
            return Err(Error::Shape("validity masks differ".into()));
        }
        Ok(())
    }
}

/// Per-pixel `actual - predicted`, meaningful on valid pixels only.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualPlane {
    geom: SensorGeometry,
    values: Vec<f64>,
    valid: Vec<bool>,
}

impl ResidualPlane {
    pub fn zeros_like(img: &RangeImage) -> Self {
        ResidualPlane { geom: img.geom, values: vec![0.0; img.len()], valid: img.valid.clone() }
    }

    pub fn from_parts(geom: SensorGeometry, values: Vec<f64>, valid: Vec<bool>) -> Result<Self> {
        let n = geom.pixel_count();
        if values.len() != n || valid.len() != n {
            return Err(Error::Shape(format!(
                "expected {n} residuals, got {} values and {} mask entries",
                values.len(),
                valid.len()
            )));
        }
        Ok(ResidualPlane { geom, values, valid })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn valid_mask(&self) -> &[bool] {
        &self.valid
    }

    pub fn geometry(&self) -> &SensorGeometry {
        &self.geom
    }

    pub fn mean_abs(&self) -> f64 {
        let (sum, n) = self
            .values
            .iter()
            .zip(&self.valid)
            .filter(|(_, v)| **v)
            .fold((0.0, 0usize), |(s, n), (r, _)| (s + r.abs(), n + 1));
        if n == 0 {
            0.0
        } else {
            sum / n as f64
        }
    }
}

pub fn subtract(actual: &RangeImage, predicted: &RangeImage) -> Result<ResidualPlane> {
    actual.check_compatible(&predicted.geom, &predicted.valid)?;
    let values = actual
        .depths
        .iter()
        .zip(&predicted.depths)
        .zip(&actual.valid)
        .map(|((a, p), v)| if *v { a - p } else { 0.0 })
        .collect();
    Ok(ResidualPlane { geom: actual.geom, values, valid: actual.valid.clone() })
}

/// Returns the reconstructed image and how many pixels went negative and
/// were clamped to zero.
pub fn add_residual(predicted: &RangeImage, residual: &ResidualPlane) -> Result<(RangeImage, usize)> {
    predicted.check_compatible(&residual.geom, &residual.valid)?;
    let mut clamped = 0;
    let depths = predicted
        .depths
        .iter()
        .zip(&residual.values)
        .zip(&predicted.valid)
        .map(|((p, r), v)| {
            if !*v {
                return EMPTY_DEPTH;
            }
            let d = p + r;
            if d < 0.0 {
                clamped += 1;
                0.0
            } else {
                d
            }
        })
        .collect();
    Ok((RangeImage { geom: predicted.geom, depths, valid: predicted.valid.clone() }, clamped))
}

/// One point per valid pixel, row-major.
pub fn to_point_cloud(img: &RangeImage) -> Vec<Point3> {
    let rays = img.geom.rays();
    let w = img.width();
    img.valid_indices().map(|i| rays.point(i / w, i % w, img.depths[i])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom() -> SensorGeometry {
        SensorGeometry::new(5, 1.0, -2.0, 2.0).unwrap()
    }

    fn image_with(values: &[(usize, usize, f64)]) -> RangeImage {
        let mut img = RangeImage::empty(geom());
        for &(r, c, d) in values {
            img.set(r, c, d);
        }
        img
    }

    #[test]
    fn subtract_identical_is_zero() {
        let a = image_with(&[(0, 0, 3.0), (2, 10, 7.5)]);
        let res = subtract(&a, &a).unwrap();
        assert!(res.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn subtract_single_pixel() {
        let a = image_with(&[(1, 1, 10.3)]);
        let p = image_with(&[(1, 1, 10.0)]);
        let res = subtract(&a, &p).unwrap();
        assert!((res.values()[a.index(1, 1)] - 0.3).abs() < 1e-12);

        let a = image_with(&[(1, 1, 4.2)]);
        let p = image_with(&[(1, 1, 4.0)]);
        let res = subtract(&a, &p).unwrap();
        assert!((res.values()[a.index(1, 1)] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn mismatched_masks_are_rejected() {
        let a = image_with(&[(1, 1, 1.0)]);
        let p = image_with(&[(1, 2, 1.0)]);
        assert!(matches!(subtract(&a, &p), Err(Error::Shape(_))));
        let res = ResidualPlane::zeros_like(&a);
        assert!(add_residual(&p, &res).is_err());
    }

    #[test]
    fn add_residual_round_trip_and_clamp() {
        let a = image_with(&[(0, 0, 3.25), (4, 359, 80.125)]);
        let p = image_with(&[(0, 0, 3.0), (4, 359, 81.0)]);
        let res = subtract(&a, &p).unwrap();
        let (back, clamped) = add_residual(&p, &res).unwrap();
        assert_eq!(clamped, 0);
        for i in a.valid_indices() {
            assert!((back.depths()[i] - a.depths()[i]).abs() <= 1e-9 * a.depths()[i]);
        }

        let (same, _) = add_residual(&p, &ResidualPlane::zeros_like(&p)).unwrap();
        assert_eq!(same, p);

        let p = image_with(&[(2, 2, 1.0)]);
        let mut res = ResidualPlane::zeros_like(&p);
        res.values_mut()[p.index(2, 2)] = -1.5;
        let (out, clamped) = add_residual(&p, &res).unwrap();
        assert_eq!(out.get(2, 2), Some(0.0));
        assert_eq!(clamped, 1);
    }

    #[test]
    fn point_cloud_conversion() {
        assert!(to_point_cloud(&RangeImage::empty(geom())).is_empty());
        let img = image_with(&[(2, 0, 5.0)]);
        let pts = to_point_cloud(&img);
        assert_eq!(pts.len(), 1);
        assert!((pts[0].x - 5.0).abs() < 1e-12 && pts[0].y.abs() < 1e-12 && pts[0].z.abs() < 1e-12);
        let img = image_with(&[(0, 0, 1.0), (1, 5, 2.0), (3, 100, 3.0), (4, 4, 4.0)]);
        assert_eq!(to_point_cloud(&img).len(), img.valid_count());
    }

    #[test]
    fn from_parts_validates() {
        let g = geom();
        let n = g.pixel_count();
        assert!(RangeImage::from_parts(g, vec![0.0; n - 1], vec![false; n]).is_err());
        let mut d = vec![0.0; n];
        d[3] = f64::NAN;
        let mut v = vec![false; n];
        v[3] = true;
        assert!(RangeImage::from_parts(g, d, v).is_err());
    }
}
