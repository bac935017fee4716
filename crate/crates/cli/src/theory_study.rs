//! Replication check of the ensemble variance ratio on linear-Gaussian models.

use cvis::estimators::acv_mc_estimate;
use cvis::models::{synthetic_gaussian_family, SyntheticFamily};
use cvis::stats::{mean, sample_variance};
use cvis::theory::{min_ensembles, predict, r_squared};
use cvis::{BatchPlan, ModelStatistics, RngStream, Scheme};
use rayon::prelude::*;

use crate::config::TheoryConfig;
use crate::error::{CliError, Result};
use crate::problem::streams;
use crate::report::{TheoryReport, TheoryRow};

/// Family of `m` conditionally independent controls with unit variances
/// whose CV `R^2` equals `r2`.
///
/// With common correlation `rho`, `R^2 = m rho^2 / (1 + (m - 1) rho^2)`.
pub fn family_with_r2(m: usize, r2: f64) -> Result<SyntheticFamily> {
    if !(0.0..1.0).contains(&r2) || m == 0 {
        return Err(CliError::Config(format!("need m >= 1 and R^2 in [0, 1), got m={m}, R^2={r2}")));
    }
    let mf = m as f64;
    let rho = (r2 / (mf - (mf - 1.0) * r2)).sqrt();
    Ok(synthetic_gaussian_family(&vec![rho; m], &vec![1.0; m + 1], &vec![0.0; m + 1])?)
}

fn ratios(tc: &TheoryConfig) -> Vec<f64> {
    match tc.scheme {
        Scheme::Cv => Vec::new(),
        _ => vec![tc.r; tc.m],
    }
}

/// Standard error of a sample variance from the fourth central moment.
fn variance_stderr(v: &[f64]) -> f64 {
    let mu = mean(v);
    let s2 = sample_variance(v);
    let m4 = v.iter().map(|x| (x - mu).powi(4)).sum::<f64>() / v.len() as f64;
    ((m4 - s2 * s2).max(0.0) / v.len() as f64).sqrt()
}

pub fn run_theory_validation(tc: &TheoryConfig, replications: usize, seed: u64) -> Result<TheoryReport> {
    if replications < 2 {
        return Err(CliError::Config("theory validation needs at least 2 replications".into()));
    }
    let fam = family_with_r2(tc.m, tc.r2)?;
    let stats = ModelStatistics::from_covariance(&fam.covariance)?;
    let r = ratios(tc);
    let r2 = r_squared(tc.scheme, &stats, &r)?;
    let common = (tc.scheme == Scheme::AcvMf).then_some(tc.r);
    let k_min = min_ensembles(tc.scheme, r2, tc.m, common, 1.0).ok();
    let means: Vec<f64> = fam.means.iter().skip(1).copied().collect();
    let known = (tc.scheme == Scheme::Cv).then_some(means.as_slice());
    let mut rows = Vec::with_capacity(tc.k_grid.len());
    for &k in &tc.k_grid {
        let plan = BatchPlan {
            k,
            n: tc.n,
            m: 0,
            ratios: r.clone(),
            scheme: tc.scheme,
        };
        let predicted = predict(tc.scheme, &stats, &r, k).map_or(f64::NAN, |p| p.ratio);
        let draws: Vec<(f64, f64)> = (0..replications)
            .into_par_iter()
            .map(|i| {
                let rng = RngStream::new(seed, streams::REPLICATION_BASE + i as u64).child(k as u64);
                let res = acv_mc_estimate(&fam.models, &fam.input, &plan, known, &rng)?;
                Ok((res.estimate, res.baseline))
            })
            .collect::<Result<_>>()?;
        let est: Vec<f64> = draws.iter().map(|d| d.0).collect();
        let base: Vec<f64> = draws.iter().map(|d| d.1).collect();
        let exact_base = fam.covariance[(0, 0)] / (k * tc.n) as f64;
        let empirical = sample_variance(&est) / exact_base;
        rows.push(TheoryRow {
            k,
            predicted,
            empirical,
            stderr: variance_stderr(&est) / exact_base,
            empirical_paired: sample_variance(&est) / sample_variance(&base),
            below_one: empirical < 1.0,
        });
    }
    let k_crossing = rows.iter().find(|row| row.below_one).map(|row| row.k);
    Ok(TheoryReport {
        scheme: tc.scheme,
        m: tc.m,
        n: tc.n,
        r2_cv: tc.r2,
        r2,
        replications,
        k_min,
        k_crossing,
        rows,
    })
}
