//! Range-image based compression for spinning-LiDAR point clouds.
//!
//! A frame is projected to a range image, split into ground plus `K`
//! farthest-point-sampled regions, and each region is predicted by a point
//! or plane model. Only the prediction residuals are lossy: they are
//! quantized with a per-cluster step, so every reconstructed point lies
//! within half a step of its original range, and the reconstruction has
//! exactly as many points as the input image has valid pixels.
//!
//! ```
//! use rpcc::{codec, scene, CodecConfig};
//!
//! let img = scene::SceneKind::Room.generate(&scene::SceneParams::small(3)).unwrap();
//! let cfg = CodecConfig::default();
//! let frame = codec::compress(&img, &cfg).unwrap();
//! let back = codec::decompress(&frame).unwrap();
//! assert_eq!(back.valid_count(), img.valid_count());
//! ```

pub mod codec;
pub mod config;
pub mod entropy;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod ground;
pub mod io;
pub mod kdtree;
pub mod metrics;
pub mod modeling;
pub mod plane;
pub mod quantization;
pub mod range_image;
pub mod salience;
pub mod scene;
pub mod segmentation;
pub mod varint;

pub use config::{CodecConfig, Mode, Segmentation};
pub use entropy::BackendId;
pub use error::{Error, Result};
pub use geometry::{Point3, SensorGeometry};
pub use range_image::RangeImage;
