use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("point outside vertical field of view (phi = {phi_deg:.4} deg)")]
    OutOfFov { phi_deg: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("size error: {0}")]
    Size(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("decode error: {0}")]
    Decode(String),

    #[error("corrupt frame: {0}")]
    CorruptFrame(String),

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
