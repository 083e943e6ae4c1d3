//! Compress a generated scene, write the `.rpcc` bytes, decode them again
//! and check the error bound.

use rpcc::codec::{compress_detailed, decompress, CompressedFrame};
use rpcc::scene::{SceneKind, SceneParams};
use rpcc::CodecConfig;

pub fn run() -> rpcc::Result<()> {
    let img = SceneKind::Street.generate(&SceneParams::small(1))?;
    let cfg = CodecConfig::default();
    let enc = compress_detailed(&img, &cfg)?;
    let bytes = enc.frame.to_bytes();

    let back = decompress(&CompressedFrame::from_bytes(&bytes)?)?;
    assert_eq!(back.valid_count(), img.valid_count());
    let worst = img.valid_indices().map(|i| (img.depths()[i] - back.depths()[i]).abs()).fold(0.0, f64::max);

    println!("points        {}", img.valid_count());
    println!("frame bytes   {}", bytes.len());
    println!("bits/point    {:.3}", enc.stats.bpp());
    println!("max error     {worst:.5} m (bound {:.3} m)", cfg.base_accuracy / 2.0);
    Ok(())
}

#[allow(dead_code)]
fn main() -> rpcc::Result<()> {
    run()
}
