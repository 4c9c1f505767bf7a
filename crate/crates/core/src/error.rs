use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CergError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
}

pub type Result<T> = std::result::Result<T, CergError>;

pub(crate) fn invalid(msg: impl Into<String>) -> CergError {
    CergError::InvalidArgument(msg.into())
}

pub(crate) fn numerical(msg: impl Into<String>) -> CergError {
    CergError::NumericalFailure(msg.into())
}
