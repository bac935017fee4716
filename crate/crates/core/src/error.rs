use cvis_fem::FemError;
use thiserror::Error;

use crate::densities::GaussianMixture;

#[derive(Debug, Error)]
pub enum CvisError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("proposal density is zero at a point where the target is not")]
    UnsupportedPoint,

    #[error("rejection sampler gave up after {proposals} proposals for one accepted sample")]
    IntractableTarget { proposals: u64 },

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("mixture weights are invalid: {0}")]
    InvalidWeights(String),

    #[error("every mixture component underflows at a sample")]
    DegenerateResponsibility,

    #[error("EM update produced a degenerate mixture: {0}")]
    EmDegenerate(String),

    #[error("cross-entropy stopped after {levels} levels at threshold {threshold}")]
    CeNotConverged {
        levels: usize,
        threshold: f64,
        mixture: Box<GaussianMixture>,
    },

    #[error("sample covariance is degenerate")]
    DegenerateCovariance,

    #[error("linear system is singular (condition estimate {condition:e})")]
    SingularSystem { condition: f64 },

    #[error("sample ratio must exceed 1, got {0}")]
    InvalidRatio(f64),

    #[error("ensemble count K={k} must exceed M+2={}", .m + 2)]
    BoundViolated { k: usize, m: usize },

    #[error("target ratio {y} is unreachable with R^2 = {r2}")]
    InfeasibleTarget { y: f64, r2: f64 },

    #[error("weight range is undefined for zero variance")]
    UndefinedRange,

    #[error("{n_ref} reference samples are too few for a tail probability of {target}")]
    InsufficientTailMass { n_ref: usize, target: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Fem(#[from] FemError),
}

pub type Result<T> = std::result::Result<T, CvisError>;
