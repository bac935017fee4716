use std::path::Path;

use cvis::models::{BeamConfig, PlateConfig};
use cvis::{BatchPlan, EmConfig, Scheme};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    Analytic,
    Beam,
    Plate,
    Synthetic,
}

/// How estimator variances are measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VarianceMode {
    /// Empirical variance over independent replications.
    Replications,
    /// Closed-form variances from per-sample moments of one shared sample
    /// set drawn from the proposal, with bootstrap standard errors.
    Moments,
}

/// Biasing density used by the importance-sampling estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum ProposalSpec {
    /// Multilevel cross-entropy fit to the low-fidelity failure set.
    CrossEntropy,
    /// Analytic problem only: `N(0, 1)` conditioned on `z > level`.
    Intermediate { level: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalyticConfig {
    pub l0: f64,
    pub l1: f64,
}

impl Default for AnalyticConfig {
    fn default() -> Self {
        Self { l0: 3.0, l1: 2.8 }
    }
}

/// Threshold calibration and reference runs of the PDE problems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FemTargets {
    pub pf_hf: f64,
    pub pf_lf: f64,
    /// High-fidelity solves used to place the high-fidelity threshold.
    pub n_ref_hf: usize,
    pub n_ref_lf: usize,
    /// Low-fidelity samples of the reference run giving `mu1`.
    pub n_ref_mu1: usize,
}

impl Default for FemTargets {
    fn default() -> Self {
        Self {
            pf_hf: 0.02,
            pf_lf: 0.05,
            n_ref_hf: 5_000,
            n_ref_lf: 20_000,
            n_ref_mu1: 100_000,
        }
    }
}

/// Settings of the Theorem-2 replication study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TheoryConfig {
    /// Number of low-fidelity models.
    pub m: usize,
    pub k_grid: Vec<usize>,
    /// Target `R^2` of the CV scheme; ACV schemes derive theirs from the
    /// same family.
    pub r2: f64,
    pub scheme: Scheme,
    /// Common low- to high-fidelity ratio of the ACV schemes.
    pub r: f64,
    /// Shared samples per batch.
    pub n: usize,
}

impl Default for TheoryConfig {
    fn default() -> Self {
        Self {
            m: 1,
            k_grid: vec![4, 5, 6, 8, 10, 20, 50],
            r2: 0.81,
            scheme: Scheme::Cv,
            r: 8.0,
            n: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub problem: ProblemKind,
    /// Cross-entropy settings; defaults per problem when absent.
    pub em: Option<EmConfig>,
    /// `k` and `scheme` are used as given; `n` and `m` come from the
    /// allocation for the importance-sampling problems.
    pub plan: BatchPlan,
    /// Total online cost in high-fidelity evaluations.
    pub budget: f64,
    /// Defaults per problem when absent.
    pub cost_ratio: Option<f64>,
    pub lf_hf_ratio: Option<f64>,
    /// Empty means an automatic grid around the estimated weight range.
    pub alpha_grid: Vec<f64>,
    pub replications: usize,
    pub seed: u64,
    pub variance_mode: Option<VarianceMode>,
    pub proposal: ProposalSpec,
    /// Shared proposal samples of the moments mode.
    pub moment_samples: usize,
    pub bootstrap: usize,
    pub analytic: AnalyticConfig,
    pub targets: FemTargets,
    pub beam: BeamConfig,
    pub plate: PlateConfig,
    pub theory: TheoryConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            problem: ProblemKind::Analytic,
            em: None,
            plan: BatchPlan {
                k: 100,
                n: 1,
                m: 0,
                ratios: Vec::new(),
                scheme: Scheme::AcvIs,
            },
            budget: 5000.0,
            cost_ratio: None,
            lf_hf_ratio: None,
            alpha_grid: Vec::new(),
            replications: 200,
            seed: 2024,
            variance_mode: None,
            proposal: ProposalSpec::CrossEntropy,
            moment_samples: 4000,
            bootstrap: 500,
            analytic: AnalyticConfig::default(),
            targets: FemTargets::default(),
            beam: BeamConfig::default(),
            plate: PlateConfig::default(),
            theory: TheoryConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn for_problem(problem: ProblemKind) -> Self {
        Self {
            problem,
            ..Self::default()
        }
    }

    /// `n_s = 5000` and `k_init = 5` for the PDE problems unless set.
    pub fn em(&self) -> EmConfig {
        self.em.clone().unwrap_or_else(|| match self.problem {
            ProblemKind::Beam | ProblemKind::Plate => EmConfig {
                n_s: 5000,
                k_init: 5,
                ..EmConfig::default()
            },
            _ => EmConfig::default(),
        })
    }

    /// Reads JSON, or TOML when the extension is `.toml`.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.display().to_string(), e))?;
        let cfg: Self = if path.extension().is_some_and(|e| e == "toml") {
            toml::from_str(&text).map_err(|e| CliError::Config(e.to_string()))?
        } else {
            serde_json::from_str(&text).map_err(|e| CliError::Config(e.to_string()))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.budget > 0.0) {
            return Err(CliError::Config(format!("budget must be positive, got {}", self.budget)));
        }
        if self.replications == 0 {
            return Err(CliError::Config("replications must be at least 1".into()));
        }
        if self.plan.k < 2 {
            return Err(CliError::Config(format!("plan.k must be at least 2, got {}", self.plan.k)));
        }
        if matches!(self.proposal, ProposalSpec::Intermediate { .. }) && self.problem != ProblemKind::Analytic {
            return Err(CliError::Config("the intermediate proposal exists only for the analytic problem".into()));
        }
        Ok(())
    }

    /// HF/LF cost ratio: 30 (analytic), 11 (beam), 37 (plate) unless set.
    pub fn cost_ratio(&self) -> f64 {
        self.cost_ratio.unwrap_or(match self.problem {
            ProblemKind::Analytic => 30.0,
            ProblemKind::Beam => self.beam.cost_ratio,
            ProblemKind::Plate => self.plate.cost_ratio,
            ProblemKind::Synthetic => 10.0,
        })
    }

    /// ACV low- to high-fidelity allocation ratio: 4.5, 4.0, 4.5.
    pub fn lf_hf_ratio(&self) -> f64 {
        self.lf_hf_ratio.unwrap_or(match self.problem {
            ProblemKind::Beam => 4.0,
            _ => 4.5,
        })
    }

    pub fn variance_mode(&self) -> VarianceMode {
        self.variance_mode.unwrap_or(match self.problem {
            ProblemKind::Beam | ProblemKind::Plate => VarianceMode::Moments,
            _ => VarianceMode::Replications,
        })
    }
}
