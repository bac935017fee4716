//! Experiment driver: configuration, equal-cost allocation, weight sweeps,
//! replication studies and report output.
pub mod allocation;
pub mod config;
pub mod error;
pub mod experiment;
pub mod problem;
pub mod report;
pub mod theory_study;

pub use allocation::{allocate_equal_cost, Allocation};
pub use config::{ExperimentConfig, ProblemKind, ProposalSpec, VarianceMode};
pub use error::{CliError, Result};
pub use experiment::{run_alpha_sweep, run_experiment};
pub use report::{Report, SweepReport, TheoryReport};
pub use theory_study::run_theory_validation;
