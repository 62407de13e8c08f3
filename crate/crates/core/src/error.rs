//! Error type shared by every module in the crate.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A parameter violated a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The conditioning covariance matrix is numerically singular, e.g.
    /// duplicate or near-duplicate sample times. No jitter is added:
    /// silently regularizing would corrupt optimizer gradients.
    #[error("singular conditioning configuration: {0}")]
    SingularConditioning(String),

    /// Adaptive quadrature ran out of its subdivision budget before the
    /// requested tolerance was met. Carries the best estimate reached.
    #[error("quadrature failed to reach tolerance (best estimate {best})")]
    QuadratureFailure { best: f64 },

    /// A request exceeded a configured size limit.
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    /// A stochastic observable returned NaN or infinity even after the
    /// batch was resampled once.
    #[error("non-finite observation: {0}")]
    NonFiniteObservation(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
