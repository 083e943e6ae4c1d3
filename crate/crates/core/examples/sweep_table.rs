//! A small ablation grid written as CSV: segmentation, modeling and
//! backend against rate and distortion.

use rpcc::experiments::{rows_to_csv, sweep};
use rpcc::scene::{SceneKind, SceneParams};
use rpcc::{BackendId, CodecConfig, Segmentation};

pub fn run() -> rpcc::Result<()> {
    let files: Vec<(String, _)> = [SceneKind::Street, SceneKind::Room]
        .into_iter()
        .map(|k| Ok((k.name().to_string(), k.generate(&SceneParams::small(1))?)))
        .collect::<rpcc::Result<_>>()?;

    let mut configs = Vec::new();
    for segmentation in [Segmentation::Fps, Segmentation::Dbscan { eps: 0.5, min_pts: 5 }] {
        for allow_planes in [true, false] {
            let mut c = CodecConfig { segmentation, backend: BackendId::Bwt, ..Default::default() };
            c.modeling.allow_planes = allow_planes;
            configs.push(c);
        }
    }

    let rows: Vec<_> = sweep(&files, &configs).into_iter().collect::<rpcc::Result<_>>()?;
    print!("{}", rows_to_csv(&rows)?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> rpcc::Result<()> {
    run()
}
