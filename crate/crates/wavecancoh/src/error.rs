//! Crate-wide error type and exit-code mapping.

use thiserror::Error;

/// Errors produced anywhere in the estimation, simulation or I/O pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported wavelet family `{0}` (supported: haar, d4)")]
    UnsupportedFamily(String),

    #[error("scale overflow: {0} levels exceed the supported maximum ({1})")]
    ScaleOverflow(usize, usize),

    #[error("series too short: length {len} but {needed} samples required")]
    InsufficientLength { len: usize, needed: usize },

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("matrix is not positive semi-definite (min eigenvalue {0:.3e})")]
    NotPsd(f64),

    #[error("rank-deficient block: {0}")]
    RankDeficient(String),

    #[error("conditioning failure at scale {scale}, time index {k}: {detail}")]
    Conditioning {
        scale: usize,
        k: usize,
        detail: String,
    },

    #[error("smoothing window 2*{m}+1 exceeds series length {len}")]
    WindowTooLong { m: usize, len: usize },

    #[error("scale count mismatch: field has {field} scales, system has {system}")]
    ScaleMismatch { field: usize, system: usize },

    #[error("lag {lag} out of range for series of length {len}")]
    LagTooLarge { lag: usize, len: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error at line {line}: {detail}")]
    Parse { line: usize, detail: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the CLI. Documented in the README:
    /// 2 usage, 3 parse, 4 validation, 5 numerical, 6 i/o.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } => 3,
            Error::UnsupportedFamily(_)
            | Error::ScaleOverflow(..)
            | Error::InsufficientLength { .. }
            | Error::InvalidData(_)
            | Error::WindowTooLong { .. }
            | Error::ScaleMismatch { .. }
            | Error::LagTooLarge { .. }
            | Error::InvalidParameter(_) => 4,
            Error::NotPsd(_) | Error::RankDeficient(_) | Error::Conditioning { .. } => 5,
            Error::Io { .. } | Error::Json(_) => 6,
        }
    }

    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
