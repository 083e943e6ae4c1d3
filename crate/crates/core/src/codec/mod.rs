//! Frame encoder and decoder.

pub mod format;
pub mod rebuild;

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{CodecConfig, Mode, Segmentation};
use crate::entropy::{compress_bytes, decompress_bytes};
use crate::error::{Error, Result};
use crate::geometry::{Point3, RayTable};
use crate::ground::{extract_ground, GroundResult};
use crate::modeling::{
    gather_clusters, mean_range, predict_with_rays, quantize_plane, select_model, ClusterModel,
    ModelingConfig,
};
use crate::quantization::{decode_codes, encode_codes, quantize};
use crate::range_image::{subtract, RangeImage};
use crate::salience::{classify_clusters, extract_key_points, SalienceMap};
use crate::segmentation::{dbscan_baseline, segment_fps, ClusterAssignment};

pub use format::{read_stream, write_stream, CompressedFrame, FrameHeader, InfoData, HEADER_LEN};
use format::{ClusterRecord, WireModel, FLAG_DBSCAN, FLAG_POINT_ONLY};
use rebuild::Rebuild;

/// Wall-clock time spent in each encoder stage.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct StageTimings {
    pub ground: Duration,
    pub segmentation: Duration,
    pub modeling: Duration,
    pub salience: Duration,
    pub quantization: Duration,
    pub entropy: Duration,
    pub total: Duration,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct EncodeStats {
    pub valid_points: usize,
    pub ground_points: usize,
    pub cluster_count: usize,
    pub plane_clusters: usize,
    pub fallback_clusters: usize,
    /// Pixels whose label had to be sent explicitly.
    pub label_exceptions: usize,
    pub mean_abs_residual: f64,
    /// Number of non-ground clusters at each salience level.
    pub level_histogram: [usize; 4],
    pub info_raw_bytes: usize,
    pub residual_raw_bytes: usize,
    pub info_bytes: usize,
    pub residual_bytes: usize,
    pub total_bytes: usize,
    pub timings: StageTimings,
}

impl EncodeStats {
    pub fn bpp(&self) -> f64 {
        bits_per_point(self.total_bytes, self.valid_points)
    }

    pub fn info_bpp(&self) -> f64 {
        bits_per_point(self.info_bytes, self.valid_points)
    }

    pub fn residual_bpp(&self) -> f64 {
        bits_per_point(self.residual_bytes, self.valid_points)
    }
}

fn bits_per_point(bytes: usize, points: usize) -> f64 {
    if points == 0 {
        0.0
    } else {
        8.0 * bytes as f64 / points as f64
    }
}

/// Everything the encoder computed along the way.
#[derive(Debug, Clone)]
pub struct Encoded {
    pub frame: CompressedFrame,
    pub stats: EncodeStats,
    pub assignment: ClusterAssignment,
    pub salience: SalienceMap,
}

#[derive(Debug, Clone)]
pub struct Decoded {
    pub image: RangeImage,
    pub assignment: ClusterAssignment,
    pub salience: SalienceMap,
}

pub fn compress(img: &RangeImage, cfg: &CodecConfig) -> Result<CompressedFrame> {
    compress_detailed(img, cfg).map(|e| e.frame)
}

pub fn decompress(frame: &CompressedFrame) -> Result<RangeImage> {
    decompress_detailed(frame).map(|d| d.image)
}

/// Decode a serialized frame.
pub fn decompress_bytes_frame(bytes: &[u8]) -> Result<RangeImage> {
    decompress(&CompressedFrame::from_bytes(bytes)?)
}

fn ground_record(ground: &GroundResult, points: &[Point3]) -> ClusterRecord {
    match (ground.plane, points.is_empty()) {
        (_, true) => ClusterRecord { model: WireModel::Point(0.0), fallback: None, level: 3 },
        (Some(plane), false) => ClusterRecord {
            model: WireModel::Plane(quantize_plane(&plane)),
            fallback: mean_range(points).ok().map(|m| m as f32),
            level: 3,
        },
        (None, false) => ClusterRecord {
            model: WireModel::Point(mean_range(points).unwrap_or(0.0) as f32),
            fallback: None,
            level: 3,
        },
    }
}

fn cluster_record(points: &[Point3], cfg: &ModelingConfig, seed: u64) -> Result<ClusterRecord> {
    if points.is_empty() {
        return Ok(ClusterRecord { model: WireModel::Point(0.0), fallback: None, level: 3 });
    }
    let mut cfg = *cfg;
    cfg.ransac.seed = seed;
    let pred = select_model(points, &cfg)?;
    Ok(match pred.model {
        ClusterModel::Point { range } => {
            ClusterRecord { model: WireModel::Point(range as f32), fallback: None, level: 3 }
        }
        ClusterModel::Plane(p) => ClusterRecord {
            model: WireModel::Plane(quantize_plane(&p)),
            fallback: Some(pred.fallback_range as f32),
            level: 3,
        },
    })
}

pub fn compress_detailed(img: &RangeImage, cfg: &CodecConfig) -> Result<Encoded> {
    let t_start = Instant::now();
    cfg.validate()?;
    let geom = img.geometry().wire_rounded();
    geom.validate()?;
    if geom.width() != img.width() {
        return Err(Error::Config("sensor geometry does not survive f32 rounding".into()));
    }
    let img = RangeImage::from_parts(geom, img.depths().to_vec(), img.valid_mask().to_vec())?;
    let base_accuracy = cfg.base_accuracy as f32 as f64;
    let ground_threshold = cfg.ground.ransac.inlier_threshold as f32;
    let mut flags = 0;
    if matches!(cfg.segmentation, Segmentation::Dbscan { .. }) {
        flags |= FLAG_DBSCAN;
    }
    if !cfg.modeling.allow_planes {
        flags |= FLAG_POINT_ONLY;
    }
    let mut header = FrameHeader {
        backend: cfg.backend,
        mode: cfg.mode,
        flags,
        base_accuracy: base_accuracy as f32,
        height: geom.height() as u16,
        width: geom.width() as u16,
        horizontal_resolution_deg: geom.horizontal_resolution_deg as f32,
        phi_min_deg: geom.phi_min_deg as f32,
        phi_max_deg: geom.phi_max_deg as f32,
        ground_threshold,
        cluster_count: 0,
        valid_count: 0,
        info_len: 0,
        residual_len: 0,
        checksum: 0,
    };
    let valid_count = img.valid_count();
    let mut stats = EncodeStats { valid_points: valid_count, ..Default::default() };

    if valid_count == 0 {
        header.checksum = header.checksum_of(&[], &[]);
        stats.total_bytes = HEADER_LEN;
        stats.timings.total = t_start.elapsed();
        return Ok(Encoded {
            frame: CompressedFrame { header, info: Vec::new(), residuals: Vec::new() },
            stats,
            assignment: ClusterAssignment {
                labels: vec![crate::segmentation::UNLABELED; img.len()],
                centers: Vec::new(),
            },
            salience: SalienceMap::uniform(0, base_accuracy),
        });
    }

    let t = Instant::now();
    let mut ground_cfg = cfg.ground;
    ground_cfg.ransac.seed = ground_cfg.ransac.seed.wrapping_add(cfg.seed);
    let ground = extract_ground(&img, &ground_cfg)?;
    stats.timings.ground = t.elapsed();

    let t = Instant::now();
    let mut assignment = match cfg.segmentation {
        Segmentation::Fps => segment_fps(&img, &ground.mask, cfg.cluster_count, cfg.max_fps_points)?,
        Segmentation::Dbscan { eps, min_pts } => dbscan_baseline(&img, &ground.mask, eps, min_pts)?,
    };
    if assignment.cluster_count() > u16::MAX as usize {
        return Err(Error::Config(format!(
            "segmentation produced {} clusters, the frame format allows 65535",
            assignment.cluster_count()
        )));
    }
    // the decoder only sees f32 centers
    for c in &mut assignment.centers {
        *c = Point3::new(c.x as f32 as f64, c.y as f32 as f64, c.z as f32 as f64);
    }
    stats.timings.segmentation = t.elapsed();

    let t = Instant::now();
    let groups = gather_clusters(&img, &assignment);
    let mut records = Vec::with_capacity(groups.len());
    records.push(ground_record(&ground, &groups[0]));
    let rest: Vec<ClusterRecord> = groups[1..]
        .par_iter()
        .enumerate()
        .map(|(k, pts)| {
            let seed = cfg.modeling.ransac.seed.wrapping_add(cfg.seed).wrapping_add(k as u64 + 1);
            cluster_record(pts, &cfg.modeling, seed)
        })
        .collect::<Result<_>>()?;
    records.extend(rest);
    let rays = RayTable::new(&geom);
    let predictors: Vec<_> = records.iter().map(|r| r.predictor()).collect();
    let (predicted, used_fallback) = predict_with_rays(&geom, &rays, &assignment, &predictors)?;
    for (rec, used) in records.iter_mut().zip(&used_fallback) {
        if !used {
            rec.fallback = None;
        }
    }
    let predictors: Vec<_> = records.iter().map(|r| r.predictor()).collect();
    let residual = subtract(&img, &predicted)?;
    stats.timings.modeling = t.elapsed();

    let t = Instant::now();
    let salience = match cfg.mode {
        Mode::Uniform => SalienceMap::uniform(assignment.cluster_count(), base_accuracy),
        Mode::NonUniform => {
            let keys = extract_key_points(&img, &cfg.salience);
            classify_clusters(&assignment, &keys, base_accuracy)?
        }
    };
    for (rec, level) in records.iter_mut().zip(&salience.levels) {
        rec.level = *level;
    }
    stats.timings.salience = t.elapsed();

    let t = Instant::now();
    let q = quantize(&residual, &salience, &assignment)?;
    let rebuild = Rebuild {
        rays: &rays,
        valid: img.valid_mask(),
        predictors: &predictors,
        accuracies: &q.accuracies,
        centers: &assignment.centers,
        ground: records[0].plane(),
        ground_threshold: ground_threshold as f64,
    };
    let exceptions = rebuild.exceptions(&q.codes, &assignment.labels)?;
    let info = InfoData {
        records,
        centers: assignment.centers.iter().map(|c| [c.x as f32, c.y as f32, c.z as f32]).collect(),
        valid: img.valid_mask().to_vec(),
        exceptions,
    };
    let info_raw = info.to_bytes();
    let residual_raw = encode_codes(&q.codes);
    stats.timings.quantization = t.elapsed();

    let t = Instant::now();
    let (info_payload, residual_payload) =
        rayon::join(|| compress_bytes(cfg.backend, &info_raw), || compress_bytes(cfg.backend, &residual_raw));
    stats.timings.entropy = t.elapsed();

    header.cluster_count = assignment.cluster_count() as u16;
    header.valid_count = valid_count as u32;
    header.info_len = info_payload.len() as u32;
    header.residual_len = residual_payload.len() as u32;
    header.checksum = header.checksum_of(&info_raw, &residual_raw);

    stats.ground_points = ground.count();
    stats.cluster_count = assignment.cluster_count();
    stats.plane_clusters = info.records[1..].iter().filter(|r| r.plane().is_some()).count();
    stats.fallback_clusters = info.records.iter().filter(|r| r.fallback.is_some()).count();
    stats.label_exceptions = info.exceptions.len();
    stats.mean_abs_residual = residual.mean_abs();
    for l in &salience.levels[1..] {
        stats.level_histogram[*l as usize] += 1;
    }
    stats.info_raw_bytes = info_raw.len();
    stats.residual_raw_bytes = residual_raw.len();
    stats.info_bytes = info_payload.len();
    stats.residual_bytes = residual_payload.len();
    stats.total_bytes = HEADER_LEN + info_payload.len() + residual_payload.len();
    stats.timings.total = t_start.elapsed();

    Ok(Encoded {
        frame: CompressedFrame { header, info: info_payload, residuals: residual_payload },
        stats,
        assignment,
        salience,
    })
}

pub fn decompress_detailed(frame: &CompressedFrame) -> Result<Decoded> {
    let h = &frame.header;
    let geom = h.geometry()?;
    let base_accuracy = h.base_accuracy as f64;
    if h.valid_count == 0 {
        if h.info_len != 0 || h.residual_len != 0 || !frame.info.is_empty() || !frame.residuals.is_empty() {
            return Err(Error::CorruptFrame("empty frame carries payload".into()));
        }
        if h.checksum_of(&[], &[]) != h.checksum {
            return Err(Error::CorruptFrame("checksum mismatch".into()));
        }
        return Ok(Decoded {
            image: RangeImage::empty(geom),
            assignment: ClusterAssignment {
                labels: vec![crate::segmentation::UNLABELED; geom.pixel_count()],
                centers: Vec::new(),
            },
            salience: SalienceMap::uniform(0, base_accuracy),
        });
    }
    let corrupt = |e: Error| match e {
        Error::CorruptFrame(m) => Error::CorruptFrame(m),
        other => Error::CorruptFrame(other.to_string()),
    };
    let (info_raw, residual_raw) = rayon::join(
        || decompress_bytes(h.backend, &frame.info),
        || decompress_bytes(h.backend, &frame.residuals),
    );
    let info_raw = info_raw.map_err(corrupt)?;
    let residual_raw = residual_raw.map_err(corrupt)?;
    if h.checksum_of(&info_raw, &residual_raw) != h.checksum {
        return Err(Error::CorruptFrame("checksum mismatch".into()));
    }
    let k = h.cluster_count as usize;
    let info = InfoData::parse(&info_raw, k, geom.pixel_count()).map_err(corrupt)?;
    let valid_count = info.valid.iter().filter(|v| **v).count();
    if valid_count != h.valid_count as usize {
        return Err(Error::CorruptFrame("validity mask disagrees with header".into()));
    }
    let codes = decode_codes(&residual_raw, valid_count).map_err(corrupt)?;
    let levels: Vec<u8> = info.records.iter().map(|r| r.level).collect();
    if h.mode == Mode::Uniform && levels.iter().any(|l| *l != crate::salience::MAX_LEVEL) {
        return Err(Error::CorruptFrame("uniform frame with reduced-accuracy clusters".into()));
    }
    let salience = SalienceMap::from_levels(levels, base_accuracy);
    let accuracies = salience.accuracies();
    let predictors: Vec<_> = info.records.iter().map(|r| r.predictor()).collect();
    let centers = info.center_points();
    let rays = RayTable::new(&geom);
    let rebuild = Rebuild {
        rays: &rays,
        valid: &info.valid,
        predictors: &predictors,
        accuracies: &accuracies,
        centers: &centers,
        ground: info.records[0].plane(),
        ground_threshold: h.ground_threshold as f64,
    };
    let (labels, recon) = rebuild.decode(&codes, &info.exceptions)?;
    let depths = recon.into_iter().map(|r| if r.is_nan() { 0.0 } else { r }).collect();
    let image = RangeImage::from_parts(geom, depths, info.valid).map_err(corrupt)?;
    Ok(Decoded { image, assignment: ClusterAssignment { labels, centers }, salience })
}
