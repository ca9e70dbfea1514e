use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes shared by every numerical module.
///
/// The variants are grouped by the CLI exit-code contract: argument and
/// configuration problems map to 2, numerical breakdowns to 3, and accuracy
/// or regularization shortfalls to 4 (see [`Error::exit_code`]).
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: usize, found: usize },

    #[error("branch error: p = {re}{im:+}i lies on the closed negative real axis")]
    Branch { re: f64, im: f64 },

    #[error("coefficient error at node {node}: {reason}")]
    Coefficient { node: usize, reason: String },

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("ill-conditioned system (condition number {cond:.3e}): {hint}")]
    Conditioning { cond: f64, hint: String },

    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("insufficient data: {0}")]
    DataInsufficient(String),

    #[error("unidentifiable: {0}")]
    Unidentifiable(String),

    #[error("accuracy not achievable: {context} (achieved bound {achieved:.3e}, requested {requested:.3e})")]
    Accuracy {
        context: String,
        achieved: f64,
        requested: f64,
    },

    #[error("spectral truncation: tail estimate {tail:.3e} against partial value {partial:.3e}")]
    Truncation { tail: f64, partial: f64 },

    #[error("regularization failure: {0}")]
    Regularization(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable process exit code for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_)
            | Error::Config(_)
            | Error::ShapeMismatch { .. }
            | Error::Branch { .. }
            | Error::Coefficient { .. }
            | Error::Io(_)
            | Error::Json(_) => 2,
            Error::Numeric(_)
            | Error::Conditioning { .. }
            | Error::Consistency(_)
            | Error::DataInsufficient(_)
            | Error::Unidentifiable(_) => 3,
            Error::Accuracy { .. } | Error::Truncation { .. } | Error::Regularization(_) => 4,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::ShapeMismatch { expected, found })
    }
}
