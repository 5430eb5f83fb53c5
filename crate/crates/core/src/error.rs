use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point at z = {z} mm cannot be projected (z must be > 0)")]
    NonProjectablePoint { z: f64 },

    #[error("scene generation failed: {0}")]
    SceneGeneration(String),

    #[error("invalid configuration: {field}: {message}")]
    InvalidConfig { field: String, message: String },

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("missing sidecar file {0}")]
    MissingSidecar(PathBuf),

    #[error("input is not a skeleton: 2x2 solid block at row {row}, col {col}")]
    NotASkeleton { row: usize, col: usize },

    #[error("pixel ({u}, {v}) is outside the {width}x{height} raster")]
    OutOfBounds {
        u: f64,
        v: f64,
        width: usize,
        height: usize,
    },

    #[error("contact at ({x}, {y}) mm is off the plate surface")]
    OffSurface { x: f64, y: f64 },

    #[error("raster dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),

    #[error("reconstructed profile is empty")]
    NoReconstruction,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.into(),
            message: message.into(),
        }
    }
}
