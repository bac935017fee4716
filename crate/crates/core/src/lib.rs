//! Multi-fidelity importance sampling with ensemble approximate control variates.

pub mod cross_entropy;
pub mod densities;
pub mod error;
pub mod estimators;
pub mod models;
pub mod rng;
pub mod stats;
pub mod theory;

pub use cross_entropy::{ce_fit, CeFit, EmConfig};
pub use densities::{Density, GaussianMixture, SampleSet};
pub use error::{CvisError, Result};
pub use estimators::{BatchPlan, EnsembleResult, Estimate, IsBatches};
pub use models::{Model, ModelPair};
pub use rng::RngStream;
pub use theory::{ModelStatistics, Scheme};
