//! Equal-cost comparisons of MFIS, MF (Algorithm 1) and MF-ACV (Algorithm 2).

use cvis::estimators::{draw_is_batches, is_estimate, IsBatches};
use cvis::stats::{mean, sample_covariance, sample_variance};
use cvis::theory::weight_range;
use cvis::{Density, EnsembleResult, RngStream, Scheme};
use rand::Rng;
use rayon::prelude::*;

use crate::allocation::{allocate_equal_cost, batch_layout};
use crate::config::{ExperimentConfig, VarianceMode};
use crate::error::{CliError, Result};
use crate::problem::{fit_proposal, setup_problem, streams, Problem, Proposal};
use crate::report::{Allocations, EstimatorRow, ProposalSummary, Report, SampleMoments, SweepReport, SweepRow};

/// Grid points of the automatic weight sweep.
pub const AUTO_GRID_POINTS: usize = 21;

pub fn allocations(cfg: &ExperimentConfig) -> Result<Allocations> {
    let c = cfg.cost_ratio();
    Ok(Allocations {
        mfis: allocate_equal_cost(cfg.budget, c, None, 1.0)?,
        cv: allocate_equal_cost(cfg.budget, c, Some(Scheme::Cv), 1.0)?,
        acv: allocate_equal_cost(cfg.budget, c, Some(Scheme::AcvIs), cfg.lf_hf_ratio())?,
    })
}

/// Batch layouts `(n, m)` of the two hybrids.
struct Layouts {
    k: usize,
    cv: usize,
    acv: (usize, usize),
}

impl Layouts {
    fn new(alloc: &Allocations, k: usize) -> Result<Self> {
        Ok(Self {
            k,
            cv: batch_layout(alloc.cv, k)?.0,
            acv: batch_layout(alloc.acv, k)?,
        })
    }

    fn n_cv(&self) -> f64 {
        (self.k * self.cv) as f64
    }

    fn n_acv(&self) -> (f64, f64) {
        let (n, m) = self.acv;
        ((self.k * n) as f64, (self.k * (n + m)) as f64)
    }
}

fn summarize(proposal: &Proposal) -> ProposalSummary {
    match (&proposal.density, &proposal.fit) {
        (Density::Mixture(g), fit) => ProposalSummary {
            kind: "cross-entropy".into(),
            components: g.k(),
            levels: fit.as_ref().map_or(0, |f| f.levels.len()),
        },
        _ => ProposalSummary {
            kind: "intermediate".into(),
            components: 0,
            levels: 0,
        },
    }
}

pub fn moments_of(y0: &[f64], y1: &[f64]) -> SampleMoments {
    SampleMoments {
        n: y0.len(),
        mean0: mean(y0),
        mean1: mean(y1),
        s00: sample_variance(y0),
        s11: sample_variance(y1),
        s01: sample_covariance(y0, y1),
    }
}

fn moments_at(y0: &[f64], y1: &[f64], idx: &[usize]) -> SampleMoments {
    let a: Vec<f64> = idx.iter().map(|&i| y0[i]).collect();
    let b: Vec<f64> = idx.iter().map(|&i| y1[i]).collect();
    moments_of(&a, &b)
}

/// Variance of the equal-cost estimators implied by per-sample moments.
struct MomentVariances<'a> {
    mo: &'a SampleMoments,
    n_mfis: f64,
    n_cv: f64,
    n_acv: (f64, f64),
}

impl MomentVariances<'_> {
    fn v0(&self) -> f64 {
        self.mo.s00 / self.n_mfis
    }

    fn cv(&self, alpha: f64) -> f64 {
        let mo = self.mo;
        (mo.s00 + alpha * alpha * mo.s11 + 2.0 * alpha * mo.s01) / self.n_cv
    }

    fn acv(&self, alpha: f64) -> f64 {
        let mo = self.mo;
        let (n, nl) = self.n_acv;
        mo.s00 / n + (alpha * alpha * mo.s11 + 2.0 * alpha * mo.s01) * (1.0 / n - 1.0 / nl)
    }
}

/// Resamples `0..n` with replacement `b` times and evaluates `stat` on each.
///
/// Returns one vector of statistics per resample.
pub fn bootstrap<F>(n: usize, b: usize, seed: u64, stat: F) -> Vec<Vec<f64>>
where
    F: Fn(&[usize]) -> Vec<f64> + Sync,
{
    let root = RngStream::new(seed, streams::BOOTSTRAP);
    (0..b)
        .into_par_iter()
        .map(|i| {
            let mut rng = root.child(i as u64);
            let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            stat(&idx)
        })
        .collect()
}

/// Standard deviation of each statistic across bootstrap resamples.
fn boot_sd(draws: &[Vec<f64>], j: usize) -> f64 {
    let v: Vec<f64> = draws.iter().map(|d| d[j]).collect();
    if v.len() < 2 {
        return f64::NAN;
    }
    sample_variance(&v).sqrt()
}

/// Fraction of resamples whose statistic `j` is at least `level`.
fn boot_tail(draws: &[Vec<f64>], j: usize, level: f64) -> f64 {
    if draws.is_empty() {
        return f64::NAN;
    }
    draws.iter().filter(|d| !(d[j] < level)).count() as f64 / draws.len() as f64
}

fn var_at(v: &[f64], idx: &[usize]) -> f64 {
    let s: Vec<f64> = idx.iter().map(|&i| v[i]).collect();
    sample_variance(&s)
}

/// One replication of the three estimators.
#[derive(Debug, Clone)]
pub struct Replication {
    pub mfis: f64,
    /// Hybrids with estimated weights.
    pub cv: EnsembleResult,
    pub acv: EnsembleResult,
    /// Hybrid estimates at each fixed weight of the grid.
    pub cv_grid: Vec<f64>,
    pub acv_grid: Vec<f64>,
}

/// Independent replications of MFIS, MF and MF-ACV at equal cost, with the
/// hybrids also evaluated at every weight in `grid`.
///
/// Replication `r` uses stream `1000 + r`; failed replications are
/// returned as messages.
pub fn replicate_estimates(
    cfg: &ExperimentConfig,
    problem: &Problem,
    proposal: &Proposal,
    grid: &[f64],
) -> Result<(Vec<Replication>, Vec<String>)> {
    let alloc = allocations(cfg)?;
    let lay = Layouts::new(&alloc, cfg.plan.k)?;
    Ok(replicate(cfg, problem, &proposal.density, &alloc, &lay, grid))
}

fn replicate(
    cfg: &ExperimentConfig,
    problem: &Problem,
    q: &Density,
    alloc: &Allocations,
    lay: &Layouts,
    grid: &[f64],
) -> (Vec<Replication>, Vec<String>) {
    let pair = &problem.pair;
    let outcomes: Vec<Result<Replication>> = (0..cfg.replications)
        .into_par_iter()
        .map(|r| {
            let rng = RngStream::new(cfg.seed, streams::REPLICATION_BASE + r as u64);
            let mfis = is_estimate(&pair.hf, &pair.input, q, &mut rng.child(0), alloc.mfis.n_hf)?;
            let cvb = draw_is_batches(pair, q, lay.k, lay.cv, 0, &rng.child(1))?;
            let acvb = draw_is_batches(pair, q, lay.k, lay.acv.0, lay.acv.1, &rng.child(2))?;
            let mut cv_grid = Vec::with_capacity(grid.len());
            let mut acv_grid = Vec::with_capacity(grid.len());
            for &a in grid {
                cv_grid.push(cvb.cv_result(problem.mu1, Some(a))?.estimate);
                acv_grid.push(acvb.acv_result(Some(a))?.estimate);
            }
            Ok(Replication {
                mfis: mfis.estimate.estimate,
                cv: cvb.cv_result(problem.mu1, None)?,
                acv: acvb.acv_result(None)?,
                cv_grid,
                acv_grid,
            })
        })
        .collect();
    let mut ok = Vec::with_capacity(outcomes.len());
    let mut failures = Vec::new();
    for (r, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(rep) => ok.push(rep),
            Err(e) => failures.push(format!("replication {r}: {e}")),
        }
    }
    (ok, failures)
}

/// Shared proposal samples of the moments mode, split into `K` batches with
/// extra low-fidelity samples at the ACV ratio.
fn moment_batches(cfg: &ExperimentConfig, problem: &Problem, q: &Density) -> Result<IsBatches> {
    let k = cfg.plan.k;
    let n = cfg.moment_samples / k;
    if n == 0 {
        return Err(CliError::Config(format!(
            "moment_samples = {} cannot fill {k} batches",
            cfg.moment_samples
        )));
    }
    let m = ((cfg.lf_hf_ratio() - 1.0) * n as f64).round() as usize;
    let rng = RngStream::new(cfg.seed, streams::MOMENTS);
    Ok(draw_is_batches(&problem.pair, q, k, n, m, &rng)?)
}

/// Weight grid centred on the pilot optimum, three times as wide as its range.
fn auto_grid(pilot: &SampleMoments) -> Vec<f64> {
    let a = pilot.alpha_star();
    let half = if a != 0.0 { 3.0 * a.abs() } else { 1.0 };
    let step = 2.0 * half / (AUTO_GRID_POINTS - 1) as f64;
    (0..AUTO_GRID_POINTS).map(|i| a - half + step * i as f64).collect()
}

/// Per-sample moments of `(Y_0 W, Y_1 W)` on the shared samples of the
/// moments mode (stream 2), independent of every replication.
pub fn pilot_moments_of(cfg: &ExperimentConfig, problem: &Problem, proposal: &Proposal) -> Result<SampleMoments> {
    Ok(pilot_moments(cfg, problem, &proposal.density)?.1)
}

fn pilot_moments(cfg: &ExperimentConfig, problem: &Problem, q: &Density) -> Result<(IsBatches, SampleMoments)> {
    let b = moment_batches(cfg, problem, q)?;
    let mo = moments_of(&b.y0w, &b.y1w);
    Ok((b, mo))
}

/// Calibrates the problem and fits the proposal.
pub fn prepare(cfg: &ExperimentConfig) -> Result<(Problem, Proposal)> {
    cfg.validate()?;
    let problem = setup_problem(cfg)?;
    let proposal = fit_proposal(cfg, &problem)?;
    Ok((problem, proposal))
}

/// Variance of MF and MF-ACV against the weight, normalised by MFIS at
/// equal online cost.
pub fn run_alpha_sweep(cfg: &ExperimentConfig) -> Result<SweepReport> {
    let (problem, proposal) = prepare(cfg)?;
    run_alpha_sweep_with(cfg, &problem, &proposal)
}

pub fn run_alpha_sweep_with(cfg: &ExperimentConfig, problem: &Problem, proposal: &Proposal) -> Result<SweepReport> {
    let alloc = allocations(cfg)?;
    let lay = Layouts::new(&alloc, cfg.plan.k)?;
    let q = &proposal.density;
    let (pilot_batches, pilot) = pilot_moments(cfg, problem, q)?;
    let grid = if cfg.alpha_grid.is_empty() {
        auto_grid(&pilot)
    } else {
        cfg.alpha_grid.clone()
    };
    let range = weight_range(pilot.s01, pilot.s11, None).ok();
    let (rows, failures) = match cfg.variance_mode() {
        VarianceMode::Replications => {
            let (reps, failures) = replicate(cfg, problem, q, &alloc, &lay, &grid);
            if reps.len() < 2 {
                return Err(CliError::Config(format!("only {} replications succeeded", reps.len())));
            }
            (sweep_replications(cfg, &reps, &grid), failures)
        }
        VarianceMode::Moments => (sweep_moments(cfg, problem, &pilot_batches, &alloc, &lay, &grid)?, Vec::new()),
    };
    Ok(SweepReport {
        problem: cfg.problem,
        variance_mode: cfg.variance_mode(),
        pilot,
        weight_range: range,
        allocations: alloc,
        rows,
        failures,
    })
}

fn sweep_replications(cfg: &ExperimentConfig, reps: &[Replication], grid: &[f64]) -> Vec<SweepRow> {
    let g = grid.len();
    let mfis: Vec<f64> = reps.iter().map(|r| r.mfis).collect();
    let cv_hat: Vec<f64> = reps.iter().map(|r| r.cv.estimate).collect();
    let acv_hat: Vec<f64> = reps.iter().map(|r| r.acv.estimate).collect();
    let cv_zero: Vec<f64> = reps.iter().map(|r| r.cv.baseline).collect();
    let acv_zero: Vec<f64> = reps.iter().map(|r| r.acv.baseline).collect();
    let cv_cols: Vec<Vec<f64>> = (0..g).map(|j| reps.iter().map(|r| r.cv_grid[j]).collect()).collect();
    let acv_cols: Vec<Vec<f64>> = (0..g).map(|j| reps.iter().map(|r| r.acv_grid[j]).collect()).collect();
    // Statistics: [v_bar_cv, v_bar_is, then per grid point v_cv, v_is, cv_vs_zero, is_vs_zero].
    let stats = |idx: &[usize]| {
        let v0 = var_at(&mfis, idx);
        let z_cv = var_at(&cv_zero, idx);
        let z_is = var_at(&acv_zero, idx);
        let mut out = vec![var_at(&cv_hat, idx) / v0, var_at(&acv_hat, idx) / v0];
        for j in 0..g {
            let vc = var_at(&cv_cols[j], idx);
            let vi = var_at(&acv_cols[j], idx);
            out.extend([vc / v0, vi / v0, vc / z_cv, vi / z_is]);
        }
        out
    };
    let all: Vec<usize> = (0..reps.len()).collect();
    let point = stats(&all);
    let draws = bootstrap(reps.len(), cfg.bootstrap, cfg.seed, stats);
    (0..g)
        .map(|j| {
            let o = 2 + 4 * j;
            SweepRow {
                alpha: grid[j],
                v_cv_ratio: point[o],
                v_is_ratio: point[o + 1],
                v_bar_cv_ratio: point[0],
                v_bar_is_ratio: point[1],
                v_cv_stderr: boot_sd(&draws, o),
                v_is_stderr: boot_sd(&draws, o + 1),
                v_bar_cv_stderr: boot_sd(&draws, 0),
                v_bar_is_stderr: boot_sd(&draws, 1),
                v_cv_vs_zero: point[o + 2],
                v_cv_vs_zero_stderr: boot_sd(&draws, o + 2),
                v_is_vs_zero: point[o + 3],
                v_is_vs_zero_stderr: boot_sd(&draws, o + 3),
            }
        })
        .collect()
}

/// Algorithm 1/2 variance estimates on the shared batches, rescaled to the
/// allocated sample sizes.
fn algorithm_variances(problem: &Problem, b: &IsBatches, lay: &Layouts) -> Result<(EnsembleResult, EnsembleResult, f64, f64)> {
    let cv = b.cv_result(problem.mu1, None)?;
    let acv = b.acv_result(None)?;
    let shared = (b.k * b.n) as f64;
    let v_cv = cv.variance * shared / lay.n_cv();
    let v_is = acv.variance * shared / lay.n_acv().0;
    Ok((cv, acv, v_cv, v_is))
}

fn sweep_moments(
    cfg: &ExperimentConfig,
    problem: &Problem,
    b: &IsBatches,
    alloc: &Allocations,
    lay: &Layouts,
    grid: &[f64],
) -> Result<Vec<SweepRow>> {
    let (_, _, vbar_cv, vbar_is) = algorithm_variances(problem, b, lay)?;
    let stats = |idx: &[usize]| {
        let mo = moments_at(&b.y0w, &b.y1w, idx);
        let mv = MomentVariances {
            mo: &mo,
            n_mfis: alloc.mfis.n_hf as f64,
            n_cv: lay.n_cv(),
            n_acv: lay.n_acv(),
        };
        let v0 = mv.v0();
        let mut out = vec![vbar_cv / v0, vbar_is / v0];
        for &a in grid {
            out.extend([mv.cv(a) / v0, mv.acv(a) / v0, mv.cv(a) / mv.cv(0.0), mv.acv(a) / mv.acv(0.0)]);
        }
        out
    };
    let n = b.y0w.len();
    let all: Vec<usize> = (0..n).collect();
    let point = stats(&all);
    let draws = bootstrap(n, cfg.bootstrap, cfg.seed, stats);
    // The Algorithm estimates are single draws; their spread under
    // Gaussian batch means is `sqrt(2 / (K - 1))` relative.
    let rel = (2.0 / (lay.k as f64 - 1.0)).sqrt();
    Ok(grid
        .iter()
        .enumerate()
        .map(|(j, &alpha)| {
            let o = 2 + 4 * j;
            SweepRow {
                alpha,
                v_cv_ratio: point[o],
                v_is_ratio: point[o + 1],
                v_bar_cv_ratio: point[0],
                v_bar_is_ratio: point[1],
                v_cv_stderr: boot_sd(&draws, o),
                v_is_stderr: boot_sd(&draws, o + 1),
                v_bar_cv_stderr: point[0] * rel,
                v_bar_is_stderr: point[1] * rel,
                v_cv_vs_zero: point[o + 2],
                v_cv_vs_zero_stderr: boot_sd(&draws, o + 2),
                v_is_vs_zero: point[o + 3],
                v_is_vs_zero_stderr: boot_sd(&draws, o + 3),
            }
        })
        .collect())
}

/// The full pipeline: calibrate, fit the proposal offline, then compare the
/// three estimators at equal online cost.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    let (problem, proposal) = prepare(cfg)?;
    run_experiment_with(cfg, &problem, &proposal)
}

pub fn run_experiment_with(cfg: &ExperimentConfig, problem: &Problem, proposal: &Proposal) -> Result<Report> {
    let alloc = allocations(cfg)?;
    let lay = Layouts::new(&alloc, cfg.plan.k)?;
    let q = &proposal.density;
    let mode = cfg.variance_mode();
    let (rows, p_cv_acv, moments, failures) = match mode {
        VarianceMode::Replications => {
            let (reps, failures) = replicate(cfg, problem, q, &alloc, &lay, &[]);
            if reps.len() < 2 {
                return Err(CliError::Config(format!("only {} replications succeeded", reps.len())));
            }
            let (rows, p) = experiment_replications(cfg, &reps, &alloc, &lay, failures.len());
            (rows, p, None, failures)
        }
        VarianceMode::Moments => {
            let b = moment_batches(cfg, problem, q)?;
            let (rows, p, mo) = experiment_moments(cfg, problem, &b, &alloc, &lay)?;
            (rows, p, Some(mo), Vec::new())
        }
    };
    Ok(Report {
        problem: cfg.problem,
        variance_mode: mode,
        seed: cfg.seed,
        budget: cfg.budget,
        cost_ratio: cfg.cost_ratio(),
        lf_hf_ratio: cfg.lf_hf_ratio(),
        k: cfg.plan.k,
        replications: cfg.replications,
        mu1: problem.mu1,
        mu1_source: problem.mu1_source,
        calibration: problem.calibration,
        offline_cost: problem.offline_cost,
        proposal: summarize(proposal),
        allocations: alloc,
        rows,
        p_cv_not_below_acv: p_cv_acv,
        moments,
        failures,
    })
}

fn experiment_replications(
    cfg: &ExperimentConfig,
    reps: &[Replication],
    alloc: &Allocations,
    lay: &Layouts,
    failed: usize,
) -> (Vec<EstimatorRow>, f64) {
    let mfis: Vec<f64> = reps.iter().map(|r| r.mfis).collect();
    let cv: Vec<f64> = reps.iter().map(|r| r.cv.estimate).collect();
    let acv: Vec<f64> = reps.iter().map(|r| r.acv.estimate).collect();
    // [v0, v_cv, v_acv, v_cv / v0, v_acv / v0, v_cv / v_acv]
    let stats = |idx: &[usize]| {
        let (v0, vc, va) = (var_at(&mfis, idx), var_at(&cv, idx), var_at(&acv, idx));
        vec![v0, vc, va, vc / v0, va / v0, vc / va]
    };
    let all: Vec<usize> = (0..reps.len()).collect();
    let point = stats(&all);
    let draws = bootstrap(reps.len(), cfg.bootstrap, cfg.seed, stats);
    let (n_acv, n_acv_lf) = lay.n_acv();
    let rows = vec![
        EstimatorRow {
            name: "mfis".into(),
            n_hf: alloc.mfis.n_hf,
            n_lf: 0,
            estimate: mean(&mfis),
            variance: point[0],
            variance_stderr: boot_sd(&draws, 0),
            ratio_vs_mfis: 1.0,
            ratio_stderr: 0.0,
            p_not_below_mfis: f64::NAN,
            alpha: 0.0,
            variance_estimate: f64::NAN,
            failures: failed,
        },
        EstimatorRow {
            name: "mf-cv".into(),
            n_hf: lay.n_cv() as usize,
            n_lf: lay.n_cv() as usize,
            estimate: mean(&cv),
            variance: point[1],
            variance_stderr: boot_sd(&draws, 1),
            ratio_vs_mfis: point[3],
            ratio_stderr: boot_sd(&draws, 3),
            p_not_below_mfis: boot_tail(&draws, 3, 1.0),
            alpha: mean(&reps.iter().map(|r| r.cv.weight[0]).collect::<Vec<_>>()),
            variance_estimate: mean(&reps.iter().map(|r| r.cv.variance).collect::<Vec<_>>()),
            failures: failed,
        },
        EstimatorRow {
            name: "mf-acv".into(),
            n_hf: n_acv as usize,
            n_lf: n_acv_lf as usize,
            estimate: mean(&acv),
            variance: point[2],
            variance_stderr: boot_sd(&draws, 2),
            ratio_vs_mfis: point[4],
            ratio_stderr: boot_sd(&draws, 4),
            p_not_below_mfis: boot_tail(&draws, 4, 1.0),
            alpha: mean(&reps.iter().map(|r| r.acv.weight[0]).collect::<Vec<_>>()),
            variance_estimate: mean(&reps.iter().map(|r| r.acv.variance).collect::<Vec<_>>()),
            failures: failed,
        },
    ];
    (rows, boot_tail(&draws, 5, 1.0))
}

fn experiment_moments(
    cfg: &ExperimentConfig,
    problem: &Problem,
    b: &IsBatches,
    alloc: &Allocations,
    lay: &Layouts,
) -> Result<(Vec<EstimatorRow>, f64, SampleMoments)> {
    let (cv, acv, vbar_cv, vbar_is) = algorithm_variances(problem, b, lay)?;
    let (a_cv, a_is) = (cv.weight[0], acv.weight[0]);
    // [v0, v_cv, v_is, v_cv / v0, v_is / v0, v_cv / v_is] at the estimated weights.
    let stats = |idx: &[usize]| {
        let mo = moments_at(&b.y0w, &b.y1w, idx);
        let mv = MomentVariances {
            mo: &mo,
            n_mfis: alloc.mfis.n_hf as f64,
            n_cv: lay.n_cv(),
            n_acv: lay.n_acv(),
        };
        let (v0, vc, vi) = (mv.v0(), mv.cv(a_cv), mv.acv(a_is));
        vec![v0, vc, vi, vc / v0, vi / v0, vc / vi]
    };
    let n = b.y0w.len();
    let all: Vec<usize> = (0..n).collect();
    let point = stats(&all);
    let draws = bootstrap(n, cfg.bootstrap, cfg.seed, stats);
    let mo = moments_of(&b.y0w, &b.y1w);
    let (n_acv, n_acv_lf) = lay.n_acv();
    let rows = vec![
        EstimatorRow {
            name: "mfis".into(),
            n_hf: alloc.mfis.n_hf,
            n_lf: 0,
            estimate: mo.mean0,
            variance: point[0],
            variance_stderr: boot_sd(&draws, 0),
            ratio_vs_mfis: 1.0,
            ratio_stderr: 0.0,
            p_not_below_mfis: f64::NAN,
            alpha: 0.0,
            variance_estimate: f64::NAN,
            failures: 0,
        },
        EstimatorRow {
            name: "mf-cv".into(),
            n_hf: lay.n_cv() as usize,
            n_lf: lay.n_cv() as usize,
            estimate: cv.estimate,
            variance: point[1],
            variance_stderr: boot_sd(&draws, 1),
            ratio_vs_mfis: point[3],
            ratio_stderr: boot_sd(&draws, 3),
            p_not_below_mfis: boot_tail(&draws, 3, 1.0),
            alpha: a_cv,
            variance_estimate: vbar_cv,
            failures: 0,
        },
        EstimatorRow {
            name: "mf-acv".into(),
            n_hf: n_acv as usize,
            n_lf: n_acv_lf as usize,
            estimate: acv.estimate,
            variance: point[2],
            variance_stderr: boot_sd(&draws, 2),
            ratio_vs_mfis: point[4],
            ratio_stderr: boot_sd(&draws, 4),
            p_not_below_mfis: boot_tail(&draws, 4, 1.0),
            alpha: a_is,
            variance_estimate: vbar_is,
            failures: 0,
        },
    ];
    Ok((rows, boot_tail(&draws, 5, 1.0), mo))
}
