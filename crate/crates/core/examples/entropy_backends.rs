//! Compare the four lossless backends on one frame's payloads.

use rpcc::experiments::bench;
use rpcc::scene::{SceneKind, SceneParams};
use rpcc::{CodecConfig, SensorGeometry};

pub fn run() -> rpcc::Result<()> {
    let geom = SensorGeometry::new(32, 0.4, -30.67, 10.67)?;
    let img = SceneKind::Street.generate(&SceneParams::new(geom, 9))?;
    println!("{:<11} {:>8} {:>7} {:>11} {:>11}", "backend", "bytes", "bpp", "encode us", "decode us");
    for row in bench(&img, &CodecConfig::default(), 3)? {
        println!(
            "{:<11} {:>8} {:>7.3} {:>11.0} {:>11.0}",
            row.backend, row.bytes, row.bpp, row.encode_us, row.decode_us
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> rpcc::Result<()> {
    run()
}
