use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FemError {
    #[error("matrix is not positive definite (pivot {pivot} = {value:e} at equation {row})")]
    NotPositiveDefinite { row: usize, pivot: usize, value: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("point ({x}, {y}) lies outside the domain [0, {lx}] x [0, {ly}]")]
    OutOfDomain { x: f64, y: f64, lx: f64, ly: f64 },

    #[error("eigen-solve did not produce finite values")]
    EigenSolve,
}
