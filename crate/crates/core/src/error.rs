use thiserror::Error;

/// Errors raised by the analytic and simulation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum PatroError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite integrand value at node (tau = {tau}, m = {m})")]
    NonFiniteIntegrand { tau: f64, m: f64 },

    #[error("no sign change of the {what} residual in [{lo}, {hi}]")]
    BracketNotFound { what: &'static str, lo: f64, hi: f64 },

    #[error("root finder for {what} did not converge after {iterations} iterations")]
    RootNotConverged { what: &'static str, iterations: usize },

    #[error("partial derivative order ({i}, {j}) exceeds the supported total order 3")]
    DerivativeOrder { i: u32, j: u32 },

    #[error("degenerate {what}: {reason}")]
    Degenerate { what: &'static str, reason: String },

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T, E = PatroError> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> PatroError {
    PatroError::InvalidParameter { name, reason: reason.into() }
}
