use thiserror::Error;

/// Amplitude magnitude beyond which an integration is declared divergent.
pub const BLOWUP_LIMIT: f64 = 1e8;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An explicit time stepper left the trusted region (non-finite value or
    /// magnitude above [`BLOWUP_LIMIT`]).
    #[error("solution blew up at step {step}")]
    BlowUp { step: usize },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
