//! Every example must run to completion.

#[path = "../examples/quickstart.rs"]
mod quickstart;

#[path = "../examples/range_image_projection.rs"]
mod range_image_projection;

#[path = "../examples/ground_and_segmentation.rs"]
mod ground_and_segmentation;

#[path = "../examples/plane_modeling.rs"]
mod plane_modeling;

#[path = "../examples/salience_levels.rs"]
mod salience_levels;

#[path = "../examples/entropy_backends.rs"]
mod entropy_backends;

#[path = "../examples/quality_metrics.rs"]
mod quality_metrics;

#[path = "../examples/file_formats.rs"]
mod file_formats;

#[path = "../examples/sweep_table.rs"]
mod sweep_table;

#[path = "../examples/street_rate.rs"]
mod street_rate;

#[test]
fn quickstart_runs() {
    quickstart::run().unwrap();
}

#[test]
fn range_image_projection_runs() {
    range_image_projection::run().unwrap();
}

#[test]
fn ground_and_segmentation_runs() {
    ground_and_segmentation::run().unwrap();
}

#[test]
fn plane_modeling_runs() {
    plane_modeling::run().unwrap();
}

#[test]
fn salience_levels_runs() {
    salience_levels::run().unwrap();
}

#[test]
fn entropy_backends_runs() {
    entropy_backends::run().unwrap();
}

#[test]
fn quality_metrics_runs() {
    quality_metrics::run().unwrap();
}

#[test]
fn file_formats_runs() {
    file_formats::run().unwrap();
}

#[test]
fn sweep_table_runs() {
    sweep_table::run().unwrap();
}

#[test]
fn street_rate_runs() {
    street_rate::run().unwrap();
}
