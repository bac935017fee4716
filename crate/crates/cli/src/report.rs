use std::path::Path;

use cvis::models::Calibration;
use cvis::theory::WeightRange;
use cvis::Scheme;
use serde::Serialize;

use crate::allocation::Allocation;
use crate::config::{ProblemKind, VarianceMode};
use crate::error::{CliError, Result};
use crate::problem::Mu1Source;

/// One estimator at equal online cost.
#[derive(Debug, Clone, Serialize)]
pub struct EstimatorRow {
    pub name: String,
    pub n_hf: usize,
    pub n_lf: usize,
    pub estimate: f64,
    /// Empirical (replications) or moment-based variance.
    pub variance: f64,
    pub variance_stderr: f64,
    pub ratio_vs_mfis: f64,
    pub ratio_stderr: f64,
    /// Bootstrap fraction with `ratio_vs_mfis >= 1`: a one-sided p-value
    /// for the estimator beating MFIS.
    pub p_not_below_mfis: f64,
    /// Weight used (mean over replications for estimated weights).
    pub alpha: f64,
    /// The Algorithm 1/2 variance estimate, averaged over replications.
    pub variance_estimate: f64,
    pub failures: usize,
}

/// Per-sample second moments of `(Y_0 W, Y_1 W)` under the proposal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleMoments {
    pub n: usize,
    pub mean0: f64,
    pub mean1: f64,
    pub s00: f64,
    pub s11: f64,
    pub s01: f64,
}

impl SampleMoments {
    pub fn r_squared(&self) -> f64 {
        if self.s00 > 0.0 && self.s11 > 0.0 {
            self.s01 * self.s01 / (self.s00 * self.s11)
        } else {
            0.0
        }
    }

    /// Optimal weight `-s01 / s11` of both hybrids.
    pub fn alpha_star(&self) -> f64 {
        if self.s11 > 0.0 {
            -self.s01 / self.s11
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProposalSummary {
    pub kind: String,
    pub components: usize,
    pub levels: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub problem: ProblemKind,
    pub variance_mode: VarianceMode,
    pub seed: u64,
    pub budget: f64,
    pub cost_ratio: f64,
    pub lf_hf_ratio: f64,
    #[serde(rename = "K")]
    pub k: usize,
    pub replications: usize,
    pub mu1: f64,
    pub mu1_source: Mu1Source,
    pub calibration: Option<[Calibration; 2]>,
    pub offline_cost: f64,
    pub proposal: ProposalSummary,
    pub allocations: Allocations,
    pub rows: Vec<EstimatorRow>,
    /// Bootstrap fraction with `v_CV >= v_IS`.
    pub p_cv_not_below_acv: f64,
    pub moments: Option<SampleMoments>,
    /// Failed replications or stages, in order.
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Allocations {
    pub mfis: Allocation,
    pub cv: Allocation,
    pub acv: Allocation,
}

/// One grid point of the weight sweep; ratios are relative to MFIS at equal
/// cost, except `*_vs_zero` which compare with `alpha = 0` on the same samples.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub v_cv_ratio: f64,
    pub v_is_ratio: f64,
    pub v_bar_cv_ratio: f64,
    pub v_bar_is_ratio: f64,
    pub v_cv_stderr: f64,
    pub v_is_stderr: f64,
    pub v_bar_cv_stderr: f64,
    pub v_bar_is_stderr: f64,
    pub v_cv_vs_zero: f64,
    pub v_cv_vs_zero_stderr: f64,
    pub v_is_vs_zero: f64,
    pub v_is_vs_zero_stderr: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub problem: ProblemKind,
    pub variance_mode: VarianceMode,
    /// Weight range and optimum from the pilot moments.
    pub pilot: SampleMoments,
    pub weight_range: Option<WeightRange>,
    pub allocations: Allocations,
    pub rows: Vec<SweepRow>,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TheoryRow {
    #[serde(rename = "K")]
    pub k: usize,
    pub predicted: f64,
    /// `Var(ensemble) / Var(MC baseline)` with the exact baseline variance.
    pub empirical: f64,
    pub stderr: f64,
    /// The same ratio against the empirical variance of the paired baseline.
    pub empirical_paired: f64,
    pub below_one: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TheoryReport {
    pub scheme: Scheme,
    pub m: usize,
    pub n: usize,
    pub r2_cv: f64,
    pub r2: f64,
    pub replications: usize,
    /// Corollary-1 minimum number of batches for a ratio below 1.
    pub k_min: Option<usize>,
    /// Smallest grid `K` whose empirical ratio is below 1.
    pub k_crossing: Option<usize>,
    pub rows: Vec<TheoryRow>,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").map_err(|e| CliError::Io(path.display().to_string(), e))
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| CliError::Io(path.display().to_string(), e))
}
