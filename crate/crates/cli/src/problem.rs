use cvis::cross_entropy::ce_fit;
use cvis::models::{analytic_pair, beam_pair, calibrate_thresholds, intermediate_threshold_density, plate_pair, Calibration};
use cvis::stats::{mean, sample_variance};
use cvis::{CeFit, Density, ModelPair, RngStream};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, ProblemKind, ProposalSpec};
use crate::error::{CliError, Result};

/// Stream ids derived from the master seed.
pub(crate) mod streams {
    pub const SETUP: u64 = 0;
    pub const PROPOSAL: u64 = 1;
    pub const MOMENTS: u64 = 2;
    pub const BOOTSTRAP: u64 = 3;
    pub const REPLICATION_BASE: u64 = 1000;
}

/// Where the control mean `mu1` of Algorithm 1 came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Mu1Source {
    Exact,
    /// Plain Monte Carlo on the low-fidelity model.
    Reference { n: usize, stderr: f64 },
}

/// A calibrated model pair ready for estimation.
#[derive(Debug, Clone)]
pub struct Problem {
    pub pair: ModelPair,
    pub mu1: f64,
    pub mu1_source: Mu1Source,
    /// High- then low-fidelity threshold calibration of the PDE problems.
    pub calibration: Option<[Calibration; 2]>,
    /// Offline cost of calibration and reference runs, in LF evaluations.
    pub offline_cost: f64,
}

pub fn setup_problem(cfg: &ExperimentConfig) -> Result<Problem> {
    let c = cfg.cost_ratio();
    let pair = match cfg.problem {
        ProblemKind::Analytic => {
            let pair = analytic_pair(cfg.analytic.l0, cfg.analytic.l1, c);
            let mu1 = pair.exact_means.map(|m| m[1]).unwrap_or(f64::NAN);
            return Ok(Problem {
                pair,
                mu1,
                mu1_source: Mu1Source::Exact,
                calibration: None,
                offline_cost: 0.0,
            });
        }
        ProblemKind::Beam => beam_pair(&cfg.beam, (f64::INFINITY, f64::INFINITY))?.with_cost_ratio(c),
        ProblemKind::Plate => plate_pair(&cfg.plate, (f64::INFINITY, f64::INFINITY))?.with_cost_ratio(c),
        ProblemKind::Synthetic => {
            return Err(CliError::Config(
                "the synthetic problem is only used by theory validation".into(),
            ))
        }
    };
    let t = &cfg.targets;
    let setup = RngStream::new(cfg.seed, streams::SETUP);
    let hf = calibrate_thresholds(&pair.hf, &pair.input, t.pf_hf, t.n_ref_hf, &mut setup.child(0))?;
    let lf = calibrate_thresholds(&pair.lf, &pair.input, t.pf_lf, t.n_ref_lf, &mut setup.child(1))?;
    let pair = pair.with_thresholds(hf.threshold, lf.threshold);
    let z = pair.input.sample(&mut setup.child(2), t.n_ref_mu1)?;
    let y = pair.lf.values(&z)?;
    let mu1 = mean(&y);
    Ok(Problem {
        offline_cost: t.n_ref_hf as f64 * c + (t.n_ref_lf + t.n_ref_mu1) as f64,
        pair,
        mu1,
        mu1_source: Mu1Source::Reference {
            n: t.n_ref_mu1,
            stderr: (sample_variance(&y) / t.n_ref_mu1 as f64).sqrt(),
        },
        calibration: Some([hf, lf]),
    })
}

/// The biasing density and, for cross-entropy, its fit history.
#[derive(Debug, Clone)]
pub struct Proposal {
    pub density: Density,
    pub fit: Option<CeFit>,
}

/// Fits the proposal to the low-fidelity failure set (offline).
pub fn fit_proposal(cfg: &ExperimentConfig, problem: &Problem) -> Result<Proposal> {
    match cfg.proposal {
        ProposalSpec::CrossEntropy => {
            let mut rng = RngStream::new(cfg.seed, streams::PROPOSAL);
            let fit = ce_fit(&problem.pair.lf, &problem.pair.input, &cfg.em(), &mut rng)?;
            Ok(Proposal {
                density: Density::Mixture(fit.mixture.clone()),
                fit: Some(fit),
            })
        }
        ProposalSpec::Intermediate { level } => Ok(Proposal {
            density: intermediate_threshold_density(level)?,
            fit: None,
        }),
    }
}
