use std::fmt;

use thiserror::Error;

use crate::format::FormatError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Pipeline stage an error originated in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Inputs,
    Conditioning,
    ForwardSampling,
    ReverseSampling,
    LockstepSampling,
    Selection,
    Output,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Inputs => "inputs",
            Stage::Conditioning => "conditioning",
            Stage::ForwardSampling => "forward sampling",
            Stage::ReverseSampling => "reverse sampling",
            Stage::LockstepSampling => "lockstep sampling",
            Stage::Selection => "frame selection",
            Stage::Output => "output",
        };
        f.write_str(name)
    }
}

/// Coarse classification used for process exit codes and FFI status codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// A parameter outside its documented range.
    Usage,
    /// Malformed or mismatched input data.
    Data,
    /// A numerical failure (factorization, degeneracy, non-finite result).
    Numerical,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Usage => 1,
            ErrorKind::Data => 2,
            ErrorKind::Numerical => 3,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("data length {actual} does not match declared shape ({expected} values)")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("a transition needs at least 2 frames, got {0}")]
    TooFewFrames(usize),

    #[error("non-finite value at flat index {index}")]
    NonFinite { index: usize },

    #[error(
        "cholesky factorization failed after jitter escalation \
         (jitter {jitter:e}, condition estimate {condition:e})"
    )]
    CholeskyFailed { jitter: f64, condition: f64 },

    #[error("both embeddings are zero; interpolation angle undefined")]
    ZeroEmbeddings,

    #[error("embeddings are antiparallel (angle {angle}); spherical interpolation is degenerate")]
    AntiparallelEmbeddings { angle: f64 },

    #[error("timestep order violated: t={t}, t_prev={t_prev}")]
    TimestepOrder { t: usize, t_prev: usize },

    #[error("timestep {t} outside 1..={max}")]
    TimestepRange { t: usize, max: usize },

    #[error(transparent)]
    Format(#[from] FormatError),

    #[error("config: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{stage}: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidParameter { .. } => ErrorKind::Usage,
            Error::ShapeMismatch(_)
            | Error::LengthMismatch { .. }
            | Error::TooFewFrames(_)
            | Error::ZeroEmbeddings
            | Error::Format(_)
            | Error::Config(_)
            | Error::Io { .. } => ErrorKind::Data,
            Error::NonFinite { .. }
            | Error::CholeskyFailed { .. }
            | Error::AntiparallelEmbeddings { .. } => ErrorKind::Numerical,
            Error::TimestepOrder { .. } | Error::TimestepRange { .. } => ErrorKind::Usage,
            Error::Stage { source, .. } => source.kind(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.kind().exit_code()
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: Stage) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: Stage) -> Result<T> {
        self.map_err(|e| match e {
            already @ Error::Stage { .. } => already,
            other => Error::Stage {
                stage,
                source: Box::new(other),
            },
        })
    }
}
