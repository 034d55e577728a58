use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error(
        "degenerate basis normalization at phase s = {s:e} (sum of basis activations underflowed)"
    )]
    DegenerateNormalization { s: f64 },

    #[error("rollout diverged at t = {t:.6} s: |x| = {norm:e} exceeds bound {bound:e}")]
    Divergence { t: f64, norm: f64, bound: f64 },

    #[error("state is inside an obstacle (isopotential C = {c:e} <= 0)")]
    InsideObstacle { c: f64 },

    #[error("singular configuration: {0}")]
    Singularity(String),

    #[error("robots {first} and {second} interpenetrate at t = {t:.6} s (mutual C = {c:e})")]
    RobotCollision {
        first: usize,
        second: usize,
        t: f64,
        c: f64,
    },

    #[error("at t = {t:.6} s: {source}")]
    AtTime {
        t: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error in {origin} at line {line}, column {column}: {message}")]
    Parse {
        origin: String,
        line: u64,
        column: u64,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Broad failure classes, used by the command line front end for exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Numerical,
    Io,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidParameter(_) | Error::Dimension(_) | Error::Parse { .. } => {
                ErrorKind::Validation
            }
            Error::DegenerateNormalization { .. }
            | Error::Divergence { .. }
            | Error::InsideObstacle { .. }
            | Error::Singularity(_)
            | Error::RobotCollision { .. } => ErrorKind::Numerical,
            Error::AtTime { source, .. } => source.kind(),
            Error::Io { .. } => ErrorKind::Io,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn at_time(self, t: f64) -> Self {
        match self {
            e
            @ (Error::AtTime { .. } | Error::Divergence { .. } | Error::RobotCollision { .. }) => e,
            e => Error::AtTime {
                t,
                source: Box::new(e),
            },
        }
    }
}
