use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate simplex: {0}")]
    Degenerate(&'static str),

    #[error("polygon is not planar: vertex {vertex} is {offset:e} off the plane (tolerance {tolerance:e})")]
    NonPlanar {
        vertex: usize,
        offset: f64,
        tolerance: f64,
    },

    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("minimum feature size violated: {0}")]
    MinimumFeature(String),

    #[error("point ({0}) lies outside the grid")]
    OutsideGrid(String),

    #[error("sizing field has no features to measure distance against")]
    EmptyFeatures,

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
