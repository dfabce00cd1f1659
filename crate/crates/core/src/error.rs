use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("moment of order {order} is infinite for {distribution}")]
    InfiniteMoment { order: u32, distribution: String },

    #[error("quadrature did not converge on [{lower}, {upper}]: estimated error {abs_err:e} after {intervals} intervals")]
    QuadratureFailure {
        lower: f64,
        upper: f64,
        abs_err: f64,
        intervals: usize,
    },

    #[error("queue is unstable: load {rho} >= 1")]
    Unstable { rho: f64 },

    #[error("exact multi-source AoI requires exponential service, got {0}")]
    NotExponential(String),

    #[error("series truncation failed: {0}")]
    TruncationFailure(String),

    #[error("source {source_index} received no packets after warmup")]
    NoDeliveries { source_index: usize },
}
