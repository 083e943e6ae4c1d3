//! Ground extraction followed by FPS region segmentation, compared with
//! the DBSCAN baseline.

use rpcc::ground::{extract_ground, GroundConfig};
use rpcc::scene::{SceneKind, SceneParams};
use rpcc::segmentation::{dbscan_baseline, segment_fps};

pub fn run() -> rpcc::Result<()> {
    let img = SceneKind::Street.generate(&SceneParams::small(7))?;
    let ground = extract_ground(&img, &GroundConfig::default())?;
    if let Some(p) = ground.plane {
        println!(
            "ground: {} of {} points, plane {:.3}x {:+.3}y {:+.3}z {:+.3} = 0",
            ground.count(),
            img.valid_count(),
            p.a,
            p.b,
            p.c,
            p.d
        );
    }

    let fps = segment_fps(&img, &ground.mask, 50, 20_000)?;
    let sizes = fps.sizes();
    println!(
        "fps: {} regions, sizes {}..{}",
        fps.cluster_count(),
        sizes[1..].iter().min().unwrap_or(&0),
        sizes[1..].iter().max().unwrap_or(&0)
    );

    let db = dbscan_baseline(&img, &ground.mask, 0.5, 5)?;
    let singletons = db.sizes()[1..].iter().filter(|s| **s == 1).count();
    println!("dbscan: {} clusters ({singletons} noise singletons)", db.cluster_count());
    Ok(())
}

#[allow(dead_code)]
fn main() -> rpcc::Result<()> {
    run()
}
