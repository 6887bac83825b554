use thiserror::Error;

/// Errors raised anywhere in the analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the domain of an operation (negative time, bad index, zero metric).
    #[error("domain error: {0}")]
    Domain(String),

    /// Adaptive quadrature stopped before reaching the requested tolerance.
    #[error("quadrature did not converge ({context}): achieved {achieved:.3e}, requested {requested:.3e}")]
    Quadrature {
        context: String,
        achieved: f64,
        requested: f64,
    },

    /// The transition table produced probabilities that do not add up.
    #[error("model consistency error: {0}")]
    Consistency(String),

    /// Reducible chains, singular systems, unreachable absorption.
    #[error("structural error: {0}")]
    Structural(String),

    /// Invalid or incomplete configuration; `path` is the dotted location of the problem.
    #[error("invalid configuration at `{path}`: {message}")]
    Config { path: String, message: String },
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) | Error::Config { .. } => 2,
            Error::Quadrature { .. } | Error::Consistency(_) | Error::Structural(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
