//! Key-point extraction, salience levels and what non-uniform
//! quantization saves.

use rpcc::codec::compress_detailed;
use rpcc::salience::{accuracy_for_level, extract_key_points, KeyPoint, SalienceConfig};
use rpcc::scene::{SceneKind, SceneParams};
use rpcc::{CodecConfig, Mode};

pub fn run() -> rpcc::Result<()> {
    let img = SceneKind::Clutter.generate(&SceneParams::small(5))?;
    let keys = extract_key_points(&img, &SalienceConfig::default());
    let edges = keys.iter().filter(|k| **k == KeyPoint::Edge).count();
    let planar = keys.iter().filter(|k| **k == KeyPoint::Planar).count();
    println!("key points: {edges} edge, {planar} planar");

    let mut bytes = Vec::new();
    for mode in [Mode::Uniform, Mode::NonUniform] {
        let enc = compress_detailed(&img, &CodecConfig { mode, ..Default::default() })?;
        let h = enc.stats.level_histogram;
        println!("{:<10} clusters per level {h:?}, {} bytes", mode.name(), enc.stats.total_bytes);
        bytes.push(enc.stats.total_bytes);
    }
    for level in 0..4 {
        println!("level {level}: accuracy {:.2} m", accuracy_for_level(0.02, level));
    }
    println!("non-uniform saves {} bytes", bytes[0] as i64 - bytes[1] as i64);
    Ok(())
}

#[allow(dead_code)]
fn main() -> rpcc::Result<()> {
    run()
}
