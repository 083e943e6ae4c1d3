//! Byte layout of a compressed frame. See `FORMAT.md` at the repository
//! root for the normative description; all integers are little-endian.

use crate::config::Mode;
use crate::entropy::BackendId;
use crate::error::{Error, Result};
use crate::geometry::{Point3, SensorGeometry};
use crate::modeling::{dequantize_plane, ClusterModel, ClusterPredictor};
use crate::plane::PlaneModel;
use crate::varint::{put_i24, put_uvarint, Reader};

pub const MAGIC: [u8; 4] = *b"RPCC";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 52;
/// Header bytes covered by the checksum (everything before it).
const CHECKED_HEADER_LEN: usize = 48;

pub const FLAG_DBSCAN: u8 = 1 << 0;
pub const FLAG_POINT_ONLY: u8 = 1 << 1;

#[derive(Debug, Clone, PartialEq)]
pub struct FrameHeader {
    pub backend: BackendId,
    pub mode: Mode,
    pub flags: u8,
    pub base_accuracy: f32,
    pub height: u16,
    pub width: u16,
    pub horizontal_resolution_deg: f32,
    pub phi_min_deg: f32,
    pub phi_max_deg: f32,
    pub ground_threshold: f32,
    pub cluster_count: u16,
    pub valid_count: u32,
    pub info_len: u32,
    pub residual_len: u32,
    /// CRC-32 over header bytes 0..48, the decoded info data and the
    /// decoded residual bytes, in that order.
    pub checksum: u32,
}

impl FrameHeader {
    pub fn geometry(&self) -> Result<SensorGeometry> {
        let g = SensorGeometry {
            num_beams: self.height as usize,
            horizontal_resolution_deg: self.horizontal_resolution_deg as f64,
            phi_min_deg: self.phi_min_deg as f64,
            phi_max_deg: self.phi_max_deg as f64,
        };
        g.validate().map_err(|e| Error::CorruptFrame(format!("bad geometry: {e}")))?;
        if g.width() != self.width as usize {
            return Err(Error::CorruptFrame(format!(
                "width {} disagrees with resolution {}",
                self.width, self.horizontal_resolution_deg
            )));
        }
        Ok(g)
    }

    pub fn write(&self, out: &mut Vec<u8>) {
        let start = out.len();
        out.extend_from_slice(&MAGIC);
        out.push(VERSION);
        out.push(self.backend.to_byte());
        out.push(self.mode.to_byte());
        out.push(self.flags);
        out.extend_from_slice(&self.base_accuracy.to_le_bytes());
        out.extend_from_slice(&self.height.to_le_bytes());
        out.extend_from_slice(&self.width.to_le_bytes());
        out.extend_from_slice(&self.horizontal_resolution_deg.to_le_bytes());
        out.extend_from_slice(&self.phi_min_deg.to_le_bytes());
        out.extend_from_slice(&self.phi_max_deg.to_le_bytes());
        out.extend_from_slice(&self.ground_threshold.to_le_bytes());
        out.extend_from_slice(&self.cluster_count.to_le_bytes());
        out.extend_from_slice(&0u16.to_le_bytes());
        out.extend_from_slice(&self.valid_count.to_le_bytes());
        out.extend_from_slice(&self.info_len.to_le_bytes());
        out.extend_from_slice(&self.residual_len.to_le_bytes());
        out.extend_from_slice(&self.checksum.to_le_bytes());
        debug_assert_eq!(out.len() - start, HEADER_LEN);
    }

    pub fn read(bytes: &[u8]) -> Result<Self> {
        let corrupt = |e: Error| Error::CorruptFrame(e.to_string());
        if bytes.len() < HEADER_LEN {
            return Err(Error::CorruptFrame(format!("{} bytes is shorter than a frame header", bytes.len())));
        }
        let mut r = Reader::new(&bytes[..HEADER_LEN]);
        if r.bytes(4).map_err(corrupt)? != MAGIC {
            return Err(Error::CorruptFrame("bad magic".into()));
        }
        let version = r.u8().map_err(corrupt)?;
        if version != VERSION {
            return Err(Error::CorruptFrame(format!("unsupported version {version}")));
        }
        let backend = BackendId::from_byte(r.u8().map_err(corrupt)?).map_err(corrupt)?;
        let mode = Mode::from_byte(r.u8().map_err(corrupt)?).map_err(corrupt)?;
        let flags = r.u8().map_err(corrupt)?;
        let base_accuracy = r.f32().map_err(corrupt)?;
        let height = r.u16().map_err(corrupt)?;
        let width = r.u16().map_err(corrupt)?;
        let horizontal_resolution_deg = r.f32().map_err(corrupt)?;
        let phi_min_deg = r.f32().map_err(corrupt)?;
        let phi_max_deg = r.f32().map_err(corrupt)?;
        let ground_threshold = r.f32().map_err(corrupt)?;
        let cluster_count = r.u16().map_err(corrupt)?;
        let _reserved = r.u16().map_err(corrupt)?;
        let header = FrameHeader {
            backend,
            mode,
            flags,
            base_accuracy,
            height,
            width,
            horizontal_resolution_deg,
            phi_min_deg,
            phi_max_deg,
            ground_threshold,
            cluster_count,
            valid_count: r.u32().map_err(corrupt)?,
            info_len: r.u32().map_err(corrupt)?,
            residual_len: r.u32().map_err(corrupt)?,
            checksum: r.u32().map_err(corrupt)?,
        };
        if !(header.base_accuracy > 0.0 && header.base_accuracy.is_finite()) {
            return Err(Error::CorruptFrame("non-positive base accuracy".into()));
        }
        Ok(header)
    }

    pub fn checksum_of(&self, info: &[u8], residuals: &[u8]) -> u32 {
        let mut head = Vec::with_capacity(HEADER_LEN);
        self.write(&mut head);
        let mut h = crc32fast::Hasher::new();
        h.update(&head[..CHECKED_HEADER_LEN]);
        h.update(info);
        h.update(residuals);
        h.finalize()
    }
}

/// Header plus the two entropy-coded payloads.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressedFrame {
    pub header: FrameHeader,
    pub info: Vec<u8>,
    pub residuals: Vec<u8>,
}

impl CompressedFrame {
    pub fn byte_len(&self) -> usize {
        HEADER_LEN + self.info.len() + self.residuals.len()
    }

    /// Bits per valid point of the whole frame.
    pub fn bpp(&self) -> Option<f64> {
        (self.header.valid_count > 0).then(|| 8.0 * self.byte_len() as f64 / self.header.valid_count as f64)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.byte_len());
        self.header.write(&mut out);
        out.extend_from_slice(&self.info);
        out.extend_from_slice(&self.residuals);
        out
    }

    /// Parse one frame from the front of `bytes`, returning it and the
    /// number of bytes consumed.
    pub fn read_prefix(bytes: &[u8]) -> Result<(Self, usize)> {
        let header = FrameHeader::read(bytes)?;
        let info_end = HEADER_LEN + header.info_len as usize;
        let end = info_end + header.residual_len as usize;
        if bytes.len() < end {
            return Err(Error::CorruptFrame(format!(
                "frame needs {end} bytes, only {} present",
                bytes.len()
            )));
        }
        let frame = CompressedFrame {
            info: bytes[HEADER_LEN..info_end].to_vec(),
            residuals: bytes[info_end..end].to_vec(),
            header,
        };
        Ok((frame, end))
    }

    /// Parse exactly one frame.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (frame, used) = Self::read_prefix(bytes)?;
        if used != bytes.len() {
            return Err(Error::CorruptFrame(format!("{} trailing bytes after frame", bytes.len() - used)));
        }
        Ok(frame)
    }
}

/// Concatenated frames, as stored in a `.rpcc` file.
pub fn read_stream(bytes: &[u8]) -> Result<Vec<CompressedFrame>> {
    let mut frames = Vec::new();
    let mut pos = 0;
    while pos < bytes.len() {
        let (f, used) = CompressedFrame::read_prefix(&bytes[pos..])?;
        frames.push(f);
        pos += used;
    }
    Ok(frames)
}

pub fn write_stream(frames: &[CompressedFrame]) -> Vec<u8> {
    frames.iter().flat_map(|f| f.to_bytes()).collect()
}

/// Transmitted form of a cluster model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WireModel {
    Point(f32),
    Plane([i32; 4]),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterRecord {
    pub model: WireModel,
    /// Present iff some pixel of a plane cluster needed the fallback range.
    pub fallback: Option<f32>,
    pub level: u8,
}

impl ClusterRecord {
    /// The predictor both encoder and decoder evaluate. A plane without a
    /// transmitted fallback predicts NaN where it would need one.
    pub fn predictor(&self) -> ClusterPredictor {
        match self.model {
            WireModel::Point(r) => ClusterPredictor::point(r as f64),
            WireModel::Plane(q) => ClusterPredictor {
                model: ClusterModel::Plane(dequantize_plane(q)),
                fallback_range: self.fallback.map_or(f64::NAN, |f| f as f64),
            },
        }
    }

    pub fn plane(&self) -> Option<PlaneModel> {
        match self.model {
            WireModel::Plane(q) => Some(dequantize_plane(q)),
            WireModel::Point(_) => None,
        }
    }
}

/// Structural payload: everything needed to regenerate the prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct InfoData {
    /// Index 0 is the ground record; a plane there also drives the
    /// decoder-side ground test.
    pub records: Vec<ClusterRecord>,
    /// One per region, region `k` at index `k - 1`.
    pub centers: Vec<[f32; 3]>,
    pub valid: Vec<bool>,
    /// `(valid-pixel ordinal, label)` where the rebuilt label is wrong.
    pub exceptions: Vec<(u32, u32)>,
}

impl InfoData {
    pub fn center_points(&self) -> Vec<Point3> {
        self.centers.iter().map(|c| Point3::new(c[0] as f64, c[1] as f64, c[2] as f64)).collect()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for (label, rec) in self.records.iter().enumerate() {
            if label > 0 {
                for v in self.centers[label - 1] {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
            let is_plane = matches!(rec.model, WireModel::Plane(_));
            let tag = is_plane as u8 | ((rec.fallback.is_some() as u8) << 1) | ((rec.level & 3) << 2);
            out.push(tag);
            match rec.model {
                WireModel::Point(r) => out.extend_from_slice(&r.to_le_bytes()),
                WireModel::Plane(q) => {
                    for v in q {
                        put_i24(&mut out, v);
                    }
                    if let Some(f) = rec.fallback {
                        out.extend_from_slice(&f.to_le_bytes());
                    }
                }
            }
        }

        // validity as alternating runs, starting with an invalid run
        let mut current = false;
        let mut run = 0u64;
        for &v in &self.valid {
            if v == current {
                run += 1;
            } else {
                put_uvarint(&mut out, run);
                current = v;
                run = 1;
            }
        }
        put_uvarint(&mut out, run);

        put_uvarint(&mut out, self.exceptions.len() as u64);
        let mut prev: Option<u32> = None;
        for &(ord, label) in &self.exceptions {
            let gap = match prev {
                None => ord,
                Some(p) => ord - p - 1,
            };
            put_uvarint(&mut out, gap as u64);
            put_uvarint(&mut out, label as u64);
            prev = Some(ord);
        }
        out
    }

    pub fn parse(bytes: &[u8], cluster_count: usize, pixel_count: usize) -> Result<Self> {
        let mut r = Reader::new(bytes);
        let mut records = Vec::with_capacity(cluster_count + 1);
        let mut centers = Vec::with_capacity(cluster_count);
        for label in 0..=cluster_count {
            if label > 0 {
                centers.push([r.f32()?, r.f32()?, r.f32()?]);
            }
            let tag = r.u8()?;
            if tag >> 4 != 0 {
                return Err(Error::Decode(format!("reserved tag bits set on cluster {label}")));
            }
            let level = (tag >> 2) & 3;
            let has_fallback = tag & 2 != 0;
            let rec = if tag & 1 == 0 {
                if has_fallback {
                    return Err(Error::Decode("point model with fallback flag".into()));
                }
                ClusterRecord { model: WireModel::Point(r.f32()?), fallback: None, level }
            } else {
                let q = [r.i24()?, r.i24()?, r.i24()?, r.i24()?];
                let fallback = if has_fallback { Some(r.f32()?) } else { None };
                ClusterRecord { model: WireModel::Plane(q), fallback, level }
            };
            records.push(rec);
        }

        let mut valid = Vec::with_capacity(pixel_count);
        let mut current = false;
        while valid.len() < pixel_count {
            let run = r.uvarint()? as usize;
            if run > pixel_count - valid.len() {
                return Err(Error::Decode("validity runs overflow the image".into()));
            }
            valid.resize(valid.len() + run, current);
            current = !current;
        }
        // a trailing zero-length run is never written, but tolerate the
        // image ending exactly on a run boundary
        let count = r.uvarint()? as usize;
        let valid_total = valid.iter().filter(|v| **v).count();
        if count > valid_total {
            return Err(Error::Decode("more exceptions than valid pixels".into()));
        }
        let mut exceptions = Vec::with_capacity(count);
        let mut prev: Option<u64> = None;
        for _ in 0..count {
            let gap = r.uvarint()?;
            let ord = match prev {
                None => gap,
                Some(p) => p + 1 + gap,
            };
            let label = r.uvarint()?;
            if ord >= valid_total as u64 || label > cluster_count as u64 {
                return Err(Error::Decode("exception entry out of range".into()));
            }
            exceptions.push((ord as u32, label as u32));
            prev = Some(ord);
        }
        if !r.is_at_end() {
            return Err(Error::Decode(format!("{} trailing info bytes", r.remaining())));
        }
        Ok(InfoData { records, centers, valid, exceptions })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_header() -> FrameHeader {
        FrameHeader {
            backend: BackendId::Deflate,
            mode: Mode::NonUniform,
            flags: 0,
            base_accuracy: 0.02,
            height: 16,
            width: 1800,
            horizontal_resolution_deg: 0.2,
            phi_min_deg: -15.0,
            phi_max_deg: 15.0,
            ground_threshold: 0.15,
            cluster_count: 3,
            valid_count: 1234,
            info_len: 10,
            residual_len: 20,
            checksum: 0xDEADBEEF,
        }
    }

    #[test]
    fn header_round_trip_and_size() {
        let h = sample_header();
        let mut buf = Vec::new();
        h.write(&mut buf);
        assert_eq!(buf.len(), HEADER_LEN);
        assert_eq!(&buf[..4], b"RPCC");
        assert_eq!(FrameHeader::read(&buf).unwrap(), h);
        h.geometry().unwrap();
    }

    #[test]
    fn header_rejects_garbage() {
        let mut buf = Vec::new();
        sample_header().write(&mut buf);
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(FrameHeader::read(&bad), Err(Error::CorruptFrame(_))));
        let mut bad = buf.clone();
        bad[4] = 99;
        assert!(FrameHeader::read(&bad).is_err());
        assert!(FrameHeader::read(&buf[..20]).is_err());
    }

    #[test]
    fn info_round_trip() {
        let mut valid = vec![false; 40];
        for i in [0, 1, 2, 7, 8, 30, 39] {
            valid[i] = true;
        }
        let info = InfoData {
            records: vec![
                ClusterRecord {
                    model: WireModel::Plane([0, 0, 8_388_607, 44_288]),
                    fallback: Some(12.5),
                    level: 3,
                },
                ClusterRecord { model: WireModel::Point(7.25), fallback: None, level: 1 },
                ClusterRecord { model: WireModel::Plane([-8_388_607, 5, -3, -1]), fallback: None, level: 0 },
            ],
            centers: vec![[1.0, 2.0, 3.0], [-4.0, 5.5, 0.0]],
            valid,
            exceptions: vec![(0, 2), (3, 0), (6, 1)],
        };
        let bytes = info.to_bytes();
        assert_eq!(InfoData::parse(&bytes, 2, 40).unwrap(), info);
        assert!(InfoData::parse(&bytes[..bytes.len() - 1], 2, 40).is_err());
        assert!(InfoData::parse(&bytes, 2, 39).is_err());
    }
}
