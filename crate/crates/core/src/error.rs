use alloc::string::String;

pub type Result<T, E = LabError> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LabError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("sampling failed: {0}")]
    Sampling(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
}

impl LabError {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        LabError::Argument(msg.into())
    }

    pub(crate) fn pre(msg: impl Into<String>) -> Self {
        LabError::Precondition(msg.into())
    }
}
