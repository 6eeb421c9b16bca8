use thiserror::Error;

/// Errors raised by the contract library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid density: {0}")]
    InvalidDensity(String),
    #[error("tabulated density queried at x = {x}, outside its grid hull [-{hull}, {hull}]")]
    Extrapolation { x: f64, hull: f64 },
    #[error("dimension mismatch: density has dimension {density}, request has {requested}")]
    DimensionMismatch { density: usize, requested: usize },
    #[error("invalid cost function: {0}")]
    InvalidCost(String),
    #[error("invalid transfer: {0}")]
    InvalidTransfer(String),
    #[error("no feasible contract: {0}")]
    NoFeasibleContract(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("target {target} is not reachable (supremum {sup})")]
    Unreachable { target: f64, sup: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
