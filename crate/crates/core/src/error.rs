use thiserror::Error;

/// Failures raised by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated a precondition (range, shape, normalization).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Two objects built on different spin bases were combined.
    #[error("basis mismatch: expected N={expected}, got N={found}")]
    BasisMismatch { expected: u32, found: u32 },

    /// A state lost normalization after a unitary step.
    #[error("norm drift {drift:.3e} exceeds tolerance after {context}")]
    NormDrift { drift: f64, context: String },

    /// A matrix claimed to be unitary or Hermitian is not.
    #[error("{what} violates its invariant: defect {defect:.3e}")]
    Invariant { what: String, defect: f64 },

    /// Eigendecomposition or another dense kernel failed.
    #[error("numerical failure in {0}")]
    Numerical(String),

    /// The interference geometry leaves the fringe fit singular.
    #[error("unrecoverable geometry: {0}")]
    Geometry(String),

    /// A configuration key was missing or malformed.
    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    /// True for failures that originate in the numerics rather than input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NormDrift { .. } | Error::Invariant { .. } | Error::Numerical(_) | Error::Geometry(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
