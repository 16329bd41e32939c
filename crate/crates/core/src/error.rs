use thiserror::Error;

use crate::geometry::Face;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid resolution: {0}")]
    InvalidResolution(String),

    #[error("unexpected end of data")]
    UnexpectedEof,

    #[error("bad magic: expected \"SHM1\"")]
    BadMagic,

    #[error("unsupported version {0}")]
    UnsupportedVersion(u32),

    #[error("size mismatch: {0}")]
    SizeMismatch(String),

    #[error("invalid gutter: {0}")]
    InvalidGutter(String),

    #[error("wrong channel count: expected {expected}, map has {found}")]
    WrongChannels { expected: u32, found: u32 },

    #[error("chart coordinate out of range: u={u}, v={v}")]
    OutOfRange { u: f64, v: f64 },

    #[error("insufficient gutter: {method} needs a gutter of {needed}, map has {found}")]
    InsufficientGutter {
        method: &'static str,
        needed: u32,
        found: u32,
    },

    #[error("non-finite field value on face {face} at stored texel ({i}, {j})")]
    NonFiniteSample { face: Face, i: isize, j: isize },

    #[error("field has no analytic chart derivatives; use central differences")]
    NoAnalyticDerivatives,

    #[error("invalid surface: {0}")]
    InvalidSurface(String),

    #[error("missing map: {0}")]
    MissingMap(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("empty mask: {0}")]
    EmptyMask(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}
