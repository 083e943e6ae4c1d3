//! Per-cluster point/plane model selection and the resulting residuals.

use rpcc::ground::{extract_ground, GroundConfig};
use rpcc::modeling::{gather_clusters, predict, select_model, ClusterPredictor, ModelingConfig};
use rpcc::range_image::subtract;
use rpcc::scene::{SceneKind, SceneParams};
use rpcc::segmentation::segment_fps;

pub fn run() -> rpcc::Result<()> {
    let img = SceneKind::Room.generate(&SceneParams::small(2))?;
    let ground = extract_ground(&img, &GroundConfig::default())?;
    let assignment = segment_fps(&img, &ground.mask, 40, 20_000)?;
    let groups = gather_clusters(&img, &assignment);

    for allow_planes in [false, true] {
        let cfg = ModelingConfig { allow_planes, ..Default::default() };
        let predictors: Vec<ClusterPredictor> = groups
            .iter()
            .map(
                |pts| {
                    if pts.is_empty() {
                        Ok(ClusterPredictor::point(0.0))
                    } else {
                        select_model(pts, &cfg)
                    }
                },
            )
            .collect::<rpcc::Result<_>>()?;
        let planes = predictors.iter().filter(|p| p.model.is_plane()).count();
        let (pred, _) = predict(img.geometry(), &assignment, &predictors)?;
        let residual = subtract(&img, &pred)?;
        println!(
            "{:<6} models: {planes:>2} planes / {} clusters, mean |residual| {:.4} m",
            if allow_planes { "plane" } else { "point" },
            predictors.len(),
            residual.mean_abs()
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> rpcc::Result<()> {
    run()
}
