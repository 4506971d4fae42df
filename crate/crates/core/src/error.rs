use alloc::string::String;
use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite value for {0}")]
    NonFinite(&'static str),
    #[error("{name} = {value} outside [{min}, {max}]")]
    OutOfBounds {
        name: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("point {0} is not on manifold {1}")]
    ManifoldMismatch(usize, &'static str),
    #[error("grid cell holds more than one dataset point (indices {0} and {1})")]
    CellCollision(usize, usize),
    #[error("kernel grid does not match dataset grid: {0}")]
    GridMismatch(&'static str),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("{spilled} of {total} path states fell outside the covering grid (tolerance {tolerance})")]
    GridSpill {
        spilled: u64,
        total: u64,
        tolerance: f64,
    },
    #[error("eigensolver failed to converge at eigenvalue index {0}")]
    EigenNoConvergence(usize),
    #[error("eigenpair {index} residual {residual:e} exceeds {bound:e}")]
    EigenResidual {
        index: usize,
        residual: f64,
        bound: f64,
    },
    #[error("stimulus generation failed: {0}")]
    Stimulus(String),
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = core::result::Result<T, Error>;
