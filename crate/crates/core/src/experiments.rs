//! Backend benchmark and configuration sweeps.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use crate::codec::{compress_detailed, decompress};
use crate::config::CodecConfig;
use crate::entropy::{compress_bytes, decompress_bytes, BackendId};
use crate::error::{Error, Result};
use crate::metrics::chamfer_sym;
use crate::range_image::{to_point_cloud, RangeImage};

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub backend: String,
    /// Compressed frame size with this backend.
    pub bytes: usize,
    pub bpp: f64,
    /// Median time to entropy-code both payloads, microseconds.
    pub encode_us: f64,
    /// Median time to decode both payloads, microseconds.
    pub decode_us: f64,
}

fn median(mut v: Vec<Duration>) -> f64 {
    v.sort();
    v[v.len() / 2].as_secs_f64() * 1e6
}

/// Time each entropy backend on the serialized payloads of one frame. The
/// rest of the pipeline is shared and run once.
pub fn bench(img: &RangeImage, cfg: &CodecConfig, repeats: usize) -> Result<Vec<BenchRow>> {
    let repeats = repeats.max(1);
    let enc = compress_detailed(img, &CodecConfig { backend: BackendId::LzFast, ..cfg.clone() })?;
    let info = decompress_bytes(BackendId::LzFast, &enc.frame.info)?;
    let residuals = decompress_bytes(BackendId::LzFast, &enc.frame.residuals)?;
    let points = enc.stats.valid_points.max(1);
    let mut rows = Vec::new();
    for backend in BackendId::ALL {
        let mut enc_t = Vec::with_capacity(repeats);
        let mut dec_t = Vec::with_capacity(repeats);
        let mut bytes = 0;
        for _ in 0..repeats {
            let t = Instant::now();
            let a = compress_bytes(backend, &info);
            let b = compress_bytes(backend, &residuals);
            enc_t.push(t.elapsed());
            let t = Instant::now();
            let da = decompress_bytes(backend, &a)?;
            let db = decompress_bytes(backend, &b)?;
            dec_t.push(t.elapsed());
            if da != info || db != residuals {
                return Err(Error::Decode(format!("{backend} failed to round-trip")));
            }
            bytes = crate::codec::HEADER_LEN + a.len() + b.len();
        }
        rows.push(BenchRow {
            backend: backend.name().into(),
            bytes,
            bpp: 8.0 * bytes as f64 / points as f64,
            encode_us: median(enc_t),
            decode_us: median(dec_t),
        });
    }
    Ok(rows)
}

/// One compressed frame under one configuration: the information /
/// residual rate split, mean residual, distortion and timings.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub file: String,
    pub config: String,
    pub mode: String,
    pub backend: String,
    pub base_accuracy: f64,
    pub points: usize,
    pub bytes: usize,
    pub info_bpp: f64,
    pub residual_bpp: f64,
    pub total_bpp: f64,
    pub compression_ratio: f64,
    pub mean_abs_residual: f64,
    pub cd_sym: f64,
    pub clusters: usize,
    pub plane_clusters: usize,
    pub label_exceptions: usize,
    pub encode_ms: f64,
    pub decode_ms: f64,
}

pub fn evaluate_config(name: &str, img: &RangeImage, cfg: &CodecConfig) -> Result<SweepRow> {
    let enc = compress_detailed(img, cfg)?;
    let t = Instant::now();
    let recon = decompress(&enc.frame)?;
    let decode = t.elapsed();
    if recon.valid_count() != img.valid_count() {
        return Err(Error::Decode("reconstruction lost points".into()));
    }
    let s = &enc.stats;
    let cd_sym =
        if s.valid_points == 0 { 0.0 } else { chamfer_sym(&to_point_cloud(img), &to_point_cloud(&recon))? };
    let total_bpp = s.bpp();
    Ok(SweepRow {
        file: name.into(),
        config: cfg.label(),
        mode: cfg.mode.name().into(),
        backend: cfg.backend.name().into(),
        base_accuracy: cfg.base_accuracy,
        points: s.valid_points,
        bytes: s.total_bytes,
        info_bpp: s.info_bpp(),
        residual_bpp: s.residual_bpp(),
        total_bpp,
        compression_ratio: if total_bpp > 0.0 { 96.0 / total_bpp } else { 0.0 },
        mean_abs_residual: s.mean_abs_residual,
        cd_sym,
        clusters: s.cluster_count,
        plane_clusters: s.plane_clusters,
        label_exceptions: s.label_exceptions,
        encode_ms: s.timings.total.as_secs_f64() * 1e3,
        decode_ms: decode.as_secs_f64() * 1e3,
    })
}

/// Every file under every configuration, files in parallel. Results keep
/// input order (file-major); failures are returned in place so one bad
/// input does not stop the sweep.
pub fn sweep(files: &[(String, RangeImage)], configs: &[CodecConfig]) -> Vec<Result<SweepRow>> {
    files
        .par_iter()
        .flat_map_iter(|(name, img)| configs.iter().map(move |c| evaluate_config(name, img, c)))
        .collect()
}

pub fn rows_to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}
