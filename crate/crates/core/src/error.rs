use thiserror::Error;

use crate::triple::ModelId;

#[derive(Debug, Error)]
pub enum Error {
    #[error("field belongs to model `{found}` but `{expected}` was expected")]
    ModelMismatch { expected: ModelId, found: ModelId },

    #[error("coefficient vector has length {found}, model declares {expected} degrees of freedom")]
    LengthMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("blow-up guard tripped at step {step} (t = {t:.6e}): {detail}")]
    BlowUp { step: usize, t: f64, detail: String },

    #[error("rate fit failed: {0}")]
    Fit(String),

    #[error("configuration rejected:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
