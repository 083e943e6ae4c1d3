//! Scan readers and writers.
//!
//! * `kitti_bin`: little-endian `f32` quadruples `(x, y, z, intensity)`.
//! * `xyz_text`: one whitespace-separated `x y z` triple per line; blank
//!   lines and lines starting with `#` are skipped.
//! * `rimg`: this crate's lossless range-image dump, see [`write_rimg`].

use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::{cloud_to_range_image, Point3, SensorGeometry};
use crate::range_image::{to_point_cloud, RangeImage};
use crate::varint::Reader;

const RIMG_MAGIC: [u8; 4] = *b"RIMG";
const RIMG_VERSION: u8 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanFormat {
    KittiBin,
    XyzText,
    Rimg,
}

impl ScanFormat {
    /// Guess from the file extension: `.bin`, `.xyz`/`.txt`, `.rimg`.
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "bin" => Some(ScanFormat::KittiBin),
            "xyz" | "txt" => Some(ScanFormat::XyzText),
            "rimg" => Some(ScanFormat::Rimg),
            _ => None,
        }
    }
}

impl FromStr for ScanFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kitti_bin" | "kitti" | "bin" => Ok(ScanFormat::KittiBin),
            "xyz_text" | "xyz" => Ok(ScanFormat::XyzText),
            "rimg" => Ok(ScanFormat::Rimg),
            _ => Err(Error::Config(format!("unknown scan format '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Scan {
    Points(Vec<Point3>),
    Image(RangeImage),
}

impl Scan {
    /// Range image for the codec, plus the number of points that were
    /// dropped while projecting (collisions or outside the field of view).
    /// An image scan keeps its own geometry.
    pub fn into_image(self, geom: &SensorGeometry) -> Result<(RangeImage, usize)> {
        match self {
            Scan::Image(img) => Ok((img, 0)),
            Scan::Points(pts) => cloud_to_range_image(&pts, geom),
        }
    }

    pub fn into_points(self) -> Vec<Point3> {
        match self {
            Scan::Points(p) => p,
            Scan::Image(img) => to_point_cloud(&img),
        }
    }
}

pub fn read_scan(path: &Path, format: ScanFormat) -> Result<Scan> {
    let bytes = fs::read(path)?;
    match format {
        ScanFormat::KittiBin => parse_kitti_bin(&bytes).map(Scan::Points),
        ScanFormat::XyzText => parse_xyz_text(&bytes).map(Scan::Points),
        ScanFormat::Rimg => parse_rimg(&bytes).map(Scan::Image),
    }
}

fn non_finite(offset: usize) -> Error {
    Error::Parse { offset: offset as u64, message: "non-finite coordinate".into() }
}

pub fn parse_kitti_bin(bytes: &[u8]) -> Result<Vec<Point3>> {
    if !bytes.len().is_multiple_of(16) {
        return Err(Error::Parse {
            offset: (bytes.len() - bytes.len() % 16) as u64,
            message: format!("{} bytes is not a whole number of 16-byte points", bytes.len()),
        });
    }
    bytes
        .chunks_exact(16)
        .enumerate()
        .map(|(i, c)| {
            let f = |k: usize| f32::from_le_bytes(c[4 * k..4 * k + 4].try_into().unwrap()) as f64;
            let p = Point3::new(f(0), f(1), f(2));
            if p.is_finite() {
                Ok(p)
            } else {
                Err(non_finite(16 * i))
            }
        })
        .collect()
}

pub fn kitti_bin_bytes(points: &[Point3]) -> Vec<u8> {
    let mut out = Vec::with_capacity(points.len() * 16);
    for p in points {
        for v in [p.x as f32, p.y as f32, p.z as f32, 0.0] {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn parse_xyz_text(bytes: &[u8]) -> Result<Vec<Point3>> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| Error::Parse { offset: e.valid_up_to() as u64, message: "not UTF-8 text".into() })?;
    let mut points = Vec::new();
    let mut offset = 0usize;
    for line in text.split_inclusive('\n') {
        let start = offset;
        offset += line.len();
        let body = line.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let vals: Vec<f64> = body
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse { offset: start as u64, message: e.to_string() })?;
        if vals.len() < 3 {
            return Err(Error::Parse {
                offset: start as u64,
                message: format!("expected 3 values, found {}", vals.len()),
            });
        }
        let p = Point3::new(vals[0], vals[1], vals[2]);
        if !p.is_finite() {
            return Err(non_finite(start));
        }
        points.push(p);
    }
    Ok(points)
}

/// Shortest round-trip decimal representation, one point per line.
pub fn xyz_text_string(points: &[Point3]) -> String {
    let mut s = String::with_capacity(points.len() * 32);
    for p in points {
        s.push_str(&format!("{} {} {}\n", p.x, p.y, p.z));
    }
    s
}

/// Layout: magic `RIMG`, version byte, three zero bytes, beam count `u32`,
/// horizontal resolution, `phi_min`, `phi_max` as `f64`, the validity mask
/// packed LSB-first, then one `f64` depth per valid pixel in row-major
/// order. All little-endian.
pub fn rimg_bytes(img: &RangeImage) -> Vec<u8> {
    let g = img.geometry();
    let mut out = Vec::new();
    out.extend_from_slice(&RIMG_MAGIC);
    out.extend_from_slice(&[RIMG_VERSION, 0, 0, 0]);
    out.extend_from_slice(&(g.num_beams as u32).to_le_bytes());
    for v in [g.horizontal_resolution_deg, g.phi_min_deg, g.phi_max_deg] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let mut bits = vec![0u8; img.len().div_ceil(8)];
    for i in img.valid_indices() {
        bits[i / 8] |= 1 << (i % 8);
    }
    out.extend_from_slice(&bits);
    for i in img.valid_indices() {
        out.extend_from_slice(&img.depths()[i].to_le_bytes());
    }
    out
}

pub fn parse_rimg(bytes: &[u8]) -> Result<RangeImage> {
    let mut r = Reader::new(bytes);
    let at =
        |r: &Reader, message: &str| Error::Parse { offset: r.position() as u64, message: message.into() };
    let head = r.bytes(8).map_err(|_| at(&r, "truncated header"))?;
    if head[..4] != RIMG_MAGIC || head[4] != RIMG_VERSION {
        return Err(Error::Parse { offset: 0, message: "not a version-1 rimg file".into() });
    }
    let beams = r.u32().map_err(|_| at(&r, "truncated header"))?;
    let mut f = [0.0; 3];
    for v in &mut f {
        let b = r.bytes(8).map_err(|_| at(&r, "truncated header"))?;
        *v = f64::from_le_bytes(b.try_into().unwrap());
    }
    let geom = SensorGeometry::new(beams as usize, f[0], f[1], f[2])
        .map_err(|e| Error::Parse { offset: 12, message: e.to_string() })?;
    let n = geom.pixel_count();
    let bits = r.bytes(n.div_ceil(8)).map_err(|_| at(&r, "truncated validity mask"))?;
    let valid: Vec<bool> = (0..n).map(|i| bits[i / 8] & (1 << (i % 8)) != 0).collect();
    let mut depths = vec![0.0; n];
    for i in 0..n {
        if valid[i] {
            let b = r.bytes(8).map_err(|_| at(&r, "truncated depth data"))?;
            depths[i] = f64::from_le_bytes(b.try_into().unwrap());
        }
    }
    if !r.is_at_end() {
        return Err(at(&r, "trailing bytes"));
    }
    RangeImage::from_parts(geom, depths, valid)
        .map_err(|e| Error::Parse { offset: 0, message: e.to_string() })
}

pub fn write_points(path: &Path, points: &[Point3], format: ScanFormat) -> Result<()> {
    match format {
        ScanFormat::KittiBin => fs::write(path, kitti_bin_bytes(points))?,
        ScanFormat::XyzText => fs::write(path, xyz_text_string(points))?,
        ScanFormat::Rimg => return Err(Error::Config("rimg stores range images, not point lists".into())),
    }
    Ok(())
}

pub fn write_rimg(path: &Path, img: &RangeImage) -> Result<()> {
    Ok(fs::write(path, rimg_bytes(img))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kitti_sizes() {
        let one = kitti_bin_bytes(&[Point3::new(1.5, -2.0, 0.25)]);
        assert_eq!(one.len(), 16);
        assert_eq!(parse_kitti_bin(&one).unwrap(), vec![Point3::new(1.5, -2.0, 0.25)]);
        match parse_kitti_bin(&one[..15]) {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 0),
            other => panic!("{other:?}"),
        }
        assert!(parse_kitti_bin(&[]).unwrap().is_empty());
    }

    #[test]
    fn xyz_text_round_trip_and_errors() {
        let pts = vec![Point3::new(0.1, 2.0, -3.25), Point3::new(1e-7, 123.456, 0.0)];
        assert_eq!(parse_xyz_text(xyz_text_string(&pts).as_bytes()).unwrap(), pts);
        let bad = b"1 2 3\n# c\n4 five 6\n";
        match parse_xyz_text(bad) {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 10),
            other => panic!("{other:?}"),
        }
        assert!(parse_xyz_text(b"1 2\n").is_err());
    }

    #[test]
    fn rimg_round_trip() {
        let geom = SensorGeometry::new(3, 45.0, -10.0, 10.0).unwrap();
        let mut img = RangeImage::empty(geom);
        img.set(0, 0, 1.0 / 3.0);
        img.set(2, 7, 80.0);
        let bytes = rimg_bytes(&img);
        assert_eq!(parse_rimg(&bytes).unwrap(), img);
        assert!(parse_rimg(&bytes[..bytes.len() - 1]).is_err());
        assert!(parse_rimg(b"RPCC").is_err());
    }
}
