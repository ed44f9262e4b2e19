//! Error type shared by every stage of the pipeline.

use thiserror::Error;

/// Errors raised by the physics and numerics modules.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain on which the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A frequency lies outside the range of a tabulated quantity.
    #[error("{quantity} requested at {omega} eV, outside the tabulated range [{min}, {max}] eV")]
    OutOfRange {
        quantity: &'static str,
        omega: f64,
        min: f64,
        max: f64,
    },

    /// A data row could not be parsed or violates a table invariant.
    #[error("row {row}: {message}")]
    Parse { row: usize, message: String },

    /// Adaptive quadrature exhausted its panel budget.
    #[error("quadrature did not converge: estimate {estimate:e}, error {error:e} after {panels} panels")]
    Convergence { estimate: f64, error: f64, panels: usize },

    /// A spectral-table node failed to evaluate.
    #[error("spectral density failed at {omega} eV: {source}")]
    Node {
        omega: f64,
        #[source]
        source: Box<Error>,
    },

    /// Inconsistent or invalid numerical configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// The time stepper left the physical region |a| <= 1.
    #[error("numerical instability at t = {t}: |a| = {norm}; reduce dt")]
    Instability { t: f64, norm: f64 },

    /// Requested an operation only defined for a restricted emitter count.
    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by the caller's parameters rather than by the
    /// numerics.
    pub fn is_config(&self) -> bool {
        match self {
            Error::Config(_) | Error::Parse { .. } | Error::Unsupported(_) | Error::Domain(_) => true,
            Error::Node { source, .. } => source.is_config(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
