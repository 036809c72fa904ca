use thiserror::Error;

/// Errors produced by the discovery library.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("testing set too large for domain: requested {requested}, capacity {capacity}")]
    TestingSetTooLarge { requested: usize, capacity: usize },

    #[error("derivative order exceeds smoothness: |alpha| = {order} > K = {smoothness}")]
    DerivativeOrderExceedsSmoothness { order: usize, smoothness: usize },

    #[error("rank deficiency: design matrix does not have full column rank")]
    RankDeficient,

    #[error("exact oracle limited to small n: got n = {0}")]
    ExactOracleTooLarge(usize),

    #[error("nonlinear iteration did not converge at step {step} (residual {residual:.3e})")]
    NonlinearDivergence { step: usize, residual: f64 },

    #[error("ill-conditioned kernel: Cholesky failed after jitter escalation")]
    IllConditionedKernel,

    #[error("{0}")]
    InvalidInput(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl CoreError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        CoreError::InvalidInput(msg.into())
    }
}
