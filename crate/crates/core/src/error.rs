use thiserror::Error;

use crate::graph::NebCertificate;
use crate::spectrum::SpectrumError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("vertex {vertex} is out of range for a graph on {n} vertices")]
    InvalidVertex { vertex: usize, n: usize },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("tree is not NEB at vertex {}", .0.vertex + 1)]
    NotNeb(Box<NebCertificate>),

    #[error(transparent)]
    Spectrum(#[from] SpectrumError),

    #[error("size mismatch: {0}")]
    SizeMismatch(String),

    #[error("matrix does not match graph: {0}")]
    GraphMismatch(String),

    #[error("numerical breakdown: {0}")]
    Numerical(String),

    #[error("eigenvalue iteration did not converge after {iterations} sweeps (order {n})")]
    NoConvergence { n: usize, iterations: usize },

    #[error("singular linearization: {0}")]
    Singular(String),

    #[error("newton correction failed after {iterations} iterations (residual {residual:e}); try a smaller epsilon or more steps")]
    NewtonDivergence { iterations: usize, residual: f64 },

    #[error("homotopy stalled at parameter {parameter:.6}: {reason}")]
    HomotopyStalled { parameter: f64, reason: String },
}

impl Error {
    /// Rejections caused by the input data rather than by arithmetic.
    pub fn is_domain_rejection(&self) -> bool {
        matches!(
            self,
            Error::InvalidVertex { .. }
                | Error::InvalidGraph(_)
                | Error::NotNeb(_)
                | Error::Spectrum(_)
                | Error::SizeMismatch(_)
                | Error::GraphMismatch(_)
        )
    }
}
