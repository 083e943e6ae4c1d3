//! Project a point cloud onto the sensor's range image and back.

use rpcc::geometry::{cloud_to_range_image, project};
use rpcc::range_image::to_point_cloud;
use rpcc::scene::{SceneKind, SceneParams};
use rpcc::SensorGeometry;

pub fn run() -> rpcc::Result<()> {
    let geom = SensorGeometry::vlp16();
    println!("vlp16 image: {} x {} ({} pixels)", geom.height(), geom.width(), geom.pixel_count());

    // a range-image-native cloud survives the round trip untouched
    let img = SceneKind::Room.generate(&SceneParams::new(geom, 4))?;
    let cloud = to_point_cloud(&img);
    let (again, dropped) = cloud_to_range_image(&cloud, &geom)?;
    let max_err =
        img.valid_indices().map(|i| (img.depths()[i] - again.depths()[i]).abs()).fold(0.0, f64::max);
    println!("{} points, {dropped} dropped, max range change {max_err:.2e} m", cloud.len());

    // one point, step by step
    let p = cloud[cloud.len() / 2];
    let px = project(p, &geom)?;
    println!("({:.3}, {:.3}, {:.3}) -> row {} col {} range {:.3}", p.x, p.y, p.z, px.row, px.col, px.range);
    Ok(())
}

#[allow(dead_code)]
fn main() -> rpcc::Result<()> {
    run()
}
