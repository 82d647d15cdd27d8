use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("polynomial is not positive regular: {0}")]
    NotPositiveRegular(String),
    #[error("point lies outside the open scalar domain (margin {margin:.3e})")]
    OutsideDomain { margin: f64 },
    #[error("operator is not positive semidefinite (min eigenvalue {min_eig:.3e})")]
    NotPsd { min_eig: f64 },
    #[error("dimension {dim} exceeds the resource cap {cap}")]
    ResourceCap { dim: usize, cap: usize },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
