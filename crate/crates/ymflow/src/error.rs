use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("discretization failure: {0}")]
    Discretization(String),
    #[error("integrator failure: {0}")]
    Integrator(String),
    #[error("divergence: {0}")]
    Divergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;
