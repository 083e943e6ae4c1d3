//! Scan files in and out: KITTI `.bin`, xyz text, range-image dumps and a
//! multi-frame `.rpcc` stream.

use rpcc::codec::{compress, decompress, read_stream, write_stream};
use rpcc::io::{read_scan, write_points, write_rimg, ScanFormat};
use rpcc::range_image::to_point_cloud;
use rpcc::scene::{SceneKind, SceneParams};
use rpcc::{CodecConfig, SensorGeometry};

pub fn run() -> rpcc::Result<()> {
    let dir = std::env::temp_dir().join(format!("rpcc-formats-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let geom = SensorGeometry::vlp16();

    let frames: Vec<_> = (0..3)
        .map(|seed| SceneKind::Street.generate(&SceneParams::new(geom, seed)))
        .collect::<rpcc::Result<_>>()?;

    let bin = dir.join("scan.bin");
    write_points(&bin, &to_point_cloud(&frames[0]), ScanFormat::KittiBin)?;
    let (img, dropped) = read_scan(&bin, ScanFormat::KittiBin)?.into_image(&geom)?;
    println!(
        "kitti_bin: {} bytes, {} points, {dropped} dropped",
        std::fs::metadata(&bin)?.len(),
        img.valid_count()
    );

    let xyz = dir.join("scan.xyz");
    write_points(&xyz, &to_point_cloud(&frames[1]), ScanFormat::XyzText)?;
    println!("xyz_text: {} points", read_scan(&xyz, ScanFormat::XyzText)?.into_points().len());

    let rimg = dir.join("scan.rimg");
    write_rimg(&rimg, &frames[2])?;
    let back = read_scan(&rimg, ScanFormat::Rimg)?.into_image(&geom)?.0;
    println!("rimg: lossless {}", back == frames[2]);

    let cfg = CodecConfig::default();
    let compressed = frames.iter().map(|f| compress(f, &cfg)).collect::<rpcc::Result<Vec<_>>>()?;
    let stream = write_stream(&compressed);
    let decoded = read_stream(&stream)?;
    println!("rpcc stream: {} frames in {} bytes", decoded.len(), stream.len());
    for (f, orig) in decoded.iter().zip(&frames) {
        assert_eq!(decompress(f)?.valid_count(), orig.valid_count());
    }
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

#[allow(dead_code)]
fn main() -> rpcc::Result<()> {
    run()
}
