//! Chamfer distance, F1 and point-to-plane PSNR of increasingly coarse
//! reconstructions.

use rpcc::codec::{compress, decompress};
use rpcc::metrics::QualityReport;
use rpcc::range_image::to_point_cloud;
use rpcc::scene::{SceneKind, SceneParams};
use rpcc::CodecConfig;

pub fn run() -> rpcc::Result<()> {
    let img = SceneKind::Street.generate(&SceneParams::small(3))?;
    let original = to_point_cloud(&img);
    println!("{:>8} {:>7} {:>9} {:>6} {:>8}", "acc [m]", "bpp", "cd [m]", "f1", "psnr");
    for acc in [0.01, 0.02, 0.05, 0.1] {
        let frame = compress(&img, &CodecConfig { base_accuracy: acc, ..Default::default() })?;
        let recon = to_point_cloud(&decompress(&frame)?);
        let r = QualityReport::evaluate(&original, &recon, Some(frame.byte_len()))?;
        println!(
            "{acc:>8.2} {:>7.3} {:>9.5} {:>6.3} {:>8.2}",
            r.rate.map_or(0.0, |x| x.bpp),
            r.cd_sym,
            r.f1,
            r.d2_psnr
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> rpcc::Result<()> {
    run()
}
