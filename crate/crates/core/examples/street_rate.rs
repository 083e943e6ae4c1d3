//! Rate and distortion of the default configuration on a 64-beam street.

use rpcc::codec::{compress_detailed, decompress};
use rpcc::metrics::QualityReport;
use rpcc::range_image::to_point_cloud;
use rpcc::scene::{SceneKind, SceneParams};
use rpcc::{CodecConfig, Mode, SensorGeometry};

pub fn run() -> rpcc::Result<()> {
    let params = SceneParams::new(SensorGeometry::hdl64e(), 42);
    let img = SceneKind::Street.generate(&params)?;
    for mode in [Mode::Uniform, Mode::NonUniform] {
        for allow_planes in [true, false] {
            let mut cfg = CodecConfig { mode, ..Default::default() };
            cfg.modeling.allow_planes = allow_planes;
            let enc = compress_detailed(&img, &cfg)?;
            let recon = decompress(&enc.frame)?;
            let report = QualityReport::evaluate(
                &to_point_cloud(&img),
                &to_point_cloud(&recon),
                Some(enc.stats.total_bytes),
            )?;
            let rate = report.rate.expect("size known");
            let s = &enc.stats;
            println!(
                "{:<10} {:<16} points {:>6}  bpp {:5.2}  CR {:5.1}  info {:4.2} res {:4.2}  |res| {:.3}  cd {:.4}  f1 {:.3}  psnr {:.1}  planes {}  exc {}  levels {:?}  {:.0} ms",
                mode.name(),
                cfg.label(),
                s.valid_points,
                rate.bpp,
                rate.compression_ratio,
                s.info_bpp(),
                s.residual_bpp(),
                s.mean_abs_residual,
                report.cd_sym,
                report.f1,
                report.d2_psnr,
                s.plane_clusters,
                s.label_exceptions,
                s.level_histogram,
                s.timings.total.as_secs_f64() * 1e3,
            );
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> rpcc::Result<()> {
    run()
}
