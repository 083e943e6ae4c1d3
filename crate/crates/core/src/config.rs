use std::str::FromStr;

use serde::Serialize;

use crate::entropy::BackendId;
use crate::error::{Error, Result};
use crate::geometry::SensorGeometry;
use crate::ground::GroundConfig;
use crate::modeling::ModelingConfig;
use crate::salience::SalienceConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Uniform,
    NonUniform,
}

impl Mode {
    pub fn to_byte(self) -> u8 {
        match self {
            Mode::Uniform => 0,
            Mode::NonUniform => 1,
        }
    }

    pub fn from_byte(b: u8) -> Result<Self> {
        match b {
            0 => Ok(Mode::Uniform),
            1 => Ok(Mode::NonUniform),
            _ => Err(Error::Decode(format!("unknown quantization mode {b}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Uniform => "uniform",
            Mode::NonUniform => "nonuniform",
        }
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Mode::Uniform),
            "nonuniform" | "non-uniform" => Ok(Mode::NonUniform),
            _ => Err(Error::Config(format!("unknown mode '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase", tag = "method")]
pub enum Segmentation {
    Fps,
    Dbscan { eps: f64, min_pts: usize },
}

impl Segmentation {
    pub fn label(&self) -> String {
        match self {
            Segmentation::Fps => "fps".into(),
            Segmentation::Dbscan { eps, .. } => format!("dbscan-{eps}"),
        }
    }
}

/// Named sensor layouts. The vertical field-of-view bounds of the presets
/// are the manufacturers' nominal values and can be overridden with
/// [`SensorPreset::Custom`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SensorPreset {
    Vlp16,
    Hdl32e,
    Hdl64e,
    Custom(SensorGeometry),
}

impl SensorPreset {
    pub fn geometry(&self) -> SensorGeometry {
        match self {
            SensorPreset::Vlp16 => SensorGeometry::vlp16(),
            SensorPreset::Hdl32e => SensorGeometry::hdl32e(),
            SensorPreset::Hdl64e => SensorGeometry::hdl64e(),
            SensorPreset::Custom(g) => *g,
        }
    }
}

impl FromStr for SensorPreset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "vlp16" => Ok(SensorPreset::Vlp16),
            "hdl32e" => Ok(SensorPreset::Hdl32e),
            "hdl64e" => Ok(SensorPreset::Hdl64e),
            _ => Err(Error::Config(format!("unknown sensor preset '{s}'"))),
        }
    }
}

/// Everything the encoder needs; the decoder reads what it needs from the
/// frame itself.
#[derive(Debug, Clone, PartialEq)]
pub struct CodecConfig {
    pub mode: Mode,
    pub base_accuracy: f64,
    pub cluster_count: usize,
    pub backend: BackendId,
    pub segmentation: Segmentation,
    pub modeling: ModelingConfig,
    pub ground: GroundConfig,
    pub salience: SalienceConfig,
    /// Upper bound on points fed to farthest point sampling.
    pub max_fps_points: usize,
    pub seed: u64,
}

impl Default for CodecConfig {
    fn default() -> Self {
        CodecConfig {
            mode: Mode::Uniform,
            base_accuracy: 0.02,
            cluster_count: 100,
            backend: BackendId::Bwt,
            segmentation: Segmentation::Fps,
            modeling: ModelingConfig::default(),
            ground: GroundConfig::default(),
            salience: SalienceConfig::default(),
            max_fps_points: 20_000,
            seed: 0,
        }
    }
}

impl CodecConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.base_accuracy > 0.0 && self.base_accuracy.is_finite()) {
            return Err(Error::Config("base accuracy must be positive".into()));
        }
        if (self.base_accuracy as f32) <= 0.0 {
            return Err(Error::Config("base accuracy underflows f32".into()));
        }
        if self.cluster_count == 0 || self.cluster_count > u16::MAX as usize {
            return Err(Error::Config("cluster count must be in 1..=65535".into()));
        }
        if self.max_fps_points == 0 {
            return Err(Error::Config("max_fps_points must be positive".into()));
        }
        if let Segmentation::Dbscan { eps, min_pts } = self.segmentation {
            if !(eps > 0.0 && eps.is_finite()) || min_pts == 0 {
                return Err(Error::Config("DBSCAN needs eps > 0 and min_pts >= 1".into()));
            }
        }
        self.ground.ransac.validate()?;
        self.modeling.ransac.validate()?;
        Ok(())
    }

    /// Short human-readable tag, e.g. `fps-100-plane`.
    pub fn label(&self) -> String {
        let model = if self.modeling.allow_planes { "plane" } else { "point" };
        match self.segmentation {
            Segmentation::Fps => format!("fps-{}-{model}", self.cluster_count),
            s => format!("{}-{model}", s.label()),
        }
    }
}
