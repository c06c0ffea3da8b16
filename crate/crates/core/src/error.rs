use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("non-finite integrand value {value} at x = {at}")]
    NonFinite { at: f64, value: f64 },

    #[error("quadrature did not converge on [{a}, {b}]: estimate {value:e}, error {error:e} after {evaluations} evaluations")]
    Quadrature {
        a: f64,
        b: f64,
        value: f64,
        error: f64,
        evaluations: usize,
    },

    #[error("unphysical state: {0}")]
    Unphysical(String),

    #[error("master-equation integration failed at tau = {tau}: {reason}")]
    Integration { tau: f64, reason: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) | Error::Config(_) => 2,
            Error::NonFinite { .. } | Error::Quadrature { .. } | Error::Unphysical(_) | Error::Integration { .. } => 3,
            Error::Io { .. } => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
