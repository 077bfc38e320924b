use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error(
        "quadrature did not converge: {low_order}- and {high_order}-node rules differ by {difference:e}"
    )]
    QuadratureNotConverged {
        low_order: usize,
        high_order: usize,
        difference: f64,
    },

    #[error("newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("continuation step fell below {min_step:e} near phi = {phi}")]
    ContinuationFailed { phi: f64, min_step: f64 },

    #[error("linear response is singular at omega = {omega} (critical point)")]
    Divergence { omega: f64 },

    #[error("total mean output intensity is zero; intensity noise is undefined")]
    ZeroIntensity,

    #[error("noise estimate has imaginary part {0:e}; correlation matrix is not Hermitian-consistent")]
    ImaginaryNoise(f64),

    #[error("no bistable region found: {0}")]
    NoTurningPoint(String),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }
}
