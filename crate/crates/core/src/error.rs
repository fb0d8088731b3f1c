use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config parse error: {0}")]
    ConfigParse(String),

    #[error("invalid config value for `{key}`: {value} ({reason})")]
    InvalidConfig {
        key: String,
        value: String,
        reason: String,
    },

    #[error("unknown ablation mode `{0}`")]
    UnknownAblation(String),

    #[error("mesh error in {path}: {reason}")]
    Mesh { path: PathBuf, reason: String },

    #[error("invalid primitive: {0}")]
    Primitive(String),

    #[error("image error in {path}: {reason}")]
    Image { path: PathBuf, reason: String },

    #[error("empty pool: {0}")]
    EmptyPool(&'static str),

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("spec/target mismatch: spec has {spec} entities, target has {target}")]
    EntityMismatch { spec: usize, target: usize },

    #[error("label parse error in {path} line {line}: {reason}")]
    Label {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("invalid crop window: {0}")]
    CropWindow(String),

    #[error("missing manifest in {0}")]
    MissingManifest(PathBuf),

    #[error("manifest error: {0}")]
    Manifest(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(key: &str, value: impl std::fmt::Debug, reason: &str) -> Self {
        Error::InvalidConfig {
            key: key.to_string(),
            value: format!("{value:?}"),
            reason: reason.to_string(),
        }
    }
}
