//! Multilevel cross-entropy fitting of Gaussian-mixture biasing densities
//! with importance-weighted EM updates.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::densities::{Density, GaussianMixture, SampleSet};
use crate::models::Model;
use crate::rng::RngStream;
use crate::{CvisError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmConfig {
    /// Samples drawn per level.
    pub n_s: usize,
    /// Elite fraction.
    pub tau: f64,
    pub k_init: usize,
    pub max_levels: usize,
    /// Relative diagonal regularisation, scaled by the elite-set variance.
    pub cov_jitter: f64,
    /// Components whose weight falls below this are removed.
    pub min_weight: f64,
    pub em_iters: usize,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            n_s: 3000,
            tau: 0.1,
            k_init: 3,
            max_levels: 50,
            cov_jitter: 1e-8,
            min_weight: 1e-4,
            em_iters: 10,
        }
    }
}

impl EmConfig {
    pub fn validate(&self, dim: usize) -> Result<()> {
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(CvisError::InvalidInput(format!("tau must lie in (0, 1), got {}", self.tau)));
        }
        if self.k_init == 0 || self.max_levels == 0 || self.em_iters == 0 {
            return Err(CvisError::InvalidInput(
                "k_init, max_levels and em_iters must be positive".into(),
            ));
        }
        if self.n_s < 10 * dim * self.k_init {
            return Err(CvisError::InvalidInput(format!(
                "n_s = {} is below 10 d k_init = {}",
                self.n_s,
                10 * dim * self.k_init
            )));
        }
        if !(self.cov_jitter >= 0.0 && self.min_weight >= 0.0 && self.min_weight < 1.0) {
            return Err(CvisError::InvalidInput("jitter and pruning thresholds must be non-negative".into()));
        }
        Ok(())
    }
}

/// Posterior component probabilities, `n x k`; rows sum to one.
pub fn responsibilities(samples: &SampleSet, mixture: &GaussianMixture) -> Result<DMatrix<f64>> {
    if samples.dim() != mixture.dim() {
        return Err(CvisError::DimensionMismatch {
            expected: mixture.dim(),
            got: samples.dim(),
        });
    }
    let k = mixture.k();
    let mut gamma = DMatrix::zeros(samples.len(), k);
    let mut buf = vec![0.0; k];
    for (i, z) in samples.iter().enumerate() {
        let total = mixture.log_weighted_components(z, &mut buf);
        if !total.is_finite() {
            return Err(CvisError::DegenerateResponsibility);
        }
        for j in 0..k {
            gamma[(i, j)] = (buf[j] - total).exp();
        }
    }
    Ok(gamma)
}

/// Mean of the per-coordinate weighted variances of the samples, or 1 when
/// the samples carry no spread. Sets the scale of the covariance jitter.
fn variance_scale(samples: &SampleSet, weights: &[f64]) -> f64 {
    let d = samples.dim();
    let total: f64 = weights.iter().sum();
    let mut mean = vec![0.0; d];
    for (z, w) in samples.iter().zip(weights) {
        for (m, x) in mean.iter_mut().zip(z) {
            *m += w * x / total;
        }
    }
    let mut var = 0.0;
    for (z, w) in samples.iter().zip(weights) {
        for (m, x) in mean.iter().zip(z) {
            var += w * (x - m).powi(2) / total;
        }
    }
    let scale = var / d as f64;
    if scale > 0.0 && scale.is_finite() {
        scale
    } else {
        1.0
    }
}

/// One weighted M-step.
///
/// Components with `nu_j / sum(nu) < min_weight` are pruned and the
/// remaining weights renormalised. Covariances get
/// `cov_jitter * scale * I` added, `scale` being the elite-set variance.
pub fn em_update(
    samples: &SampleSet,
    is_weights: &[f64],
    gamma: &DMatrix<f64>,
    cov_jitter: f64,
    min_weight: f64,
) -> Result<GaussianMixture> {
    let n = samples.len();
    let d = samples.dim();
    let k = gamma.ncols();
    if is_weights.len() != n || gamma.nrows() != n {
        return Err(CvisError::LengthMismatch(format!(
            "{n} samples, {} weights, {} responsibility rows",
            is_weights.len(),
            gamma.nrows()
        )));
    }
    if is_weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(CvisError::InvalidInput("importance weights must be finite and non-negative".into()));
    }
    let nu: Vec<f64> = (0..k)
        .map(|j| (0..n).map(|i| is_weights[i] * gamma[(i, j)]).sum())
        .collect();
    let total: f64 = nu.iter().sum();
    if !(total > 0.0) {
        return Err(CvisError::EmDegenerate("all importance weights vanish".into()));
    }
    let jitter = cov_jitter * variance_scale(samples, is_weights);
    let kept: Vec<usize> = (0..k).filter(|&j| nu[j] > 0.0 && nu[j] / total >= min_weight).collect();
    if kept.is_empty() {
        return Err(CvisError::EmDegenerate("every component was pruned".into()));
    }
    let kept_total: f64 = kept.iter().map(|&j| nu[j]).sum();
    let mut weights = Vec::with_capacity(kept.len());
    let mut means = Vec::with_capacity(kept.len());
    let mut covs = Vec::with_capacity(kept.len());
    for &j in &kept {
        let mut mu = DVector::zeros(d);
        for (i, z) in samples.iter().enumerate() {
            let w = is_weights[i] * gamma[(i, j)];
            for (a, x) in z.iter().enumerate() {
                mu[a] += w * x;
            }
        }
        mu /= nu[j];
        let mut sigma = DMatrix::zeros(d, d);
        for (i, z) in samples.iter().enumerate() {
            let w = is_weights[i] * gamma[(i, j)];
            if w == 0.0 {
                continue;
            }
            for a in 0..d {
                let da = z[a] - mu[a];
                for b in 0..=a {
                    sigma[(a, b)] += w * da * (z[b] - mu[b]);
                }
            }
        }
        sigma /= nu[j];
        for a in 0..d {
            for b in 0..a {
                sigma[(b, a)] = sigma[(a, b)];
            }
            sigma[(a, a)] += jitter;
        }
        weights.push(nu[j] / kept_total);
        means.push(mu);
        covs.push(sigma);
    }
    // Renormalisation above can leave a residual of a few ulps.
    let s: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= s);
    GaussianMixture::new(weights, means, covs).map_err(|e| CvisError::EmDegenerate(e.to_string()))
}

/// `sum_i W_i log q(z_i)`.
pub fn weighted_log_likelihood(samples: &SampleSet, is_weights: &[f64], mixture: &GaussianMixture) -> f64 {
    samples.iter().zip(is_weights).map(|(z, w)| w * mixture.log_pdf(z)).sum()
}

/// EM auxiliary function `Q(v | v_m) = sum_i W_i sum_j gamma_ij log(pi_j N_j(z_i))`,
/// with `gamma` computed under `v_m`.
pub fn q_function(samples: &SampleSet, is_weights: &[f64], gamma: &DMatrix<f64>, mixture: &GaussianMixture) -> f64 {
    let mut buf = vec![0.0; mixture.k()];
    let mut q = 0.0;
    for (i, z) in samples.iter().enumerate() {
        mixture.log_weighted_components(z, &mut buf);
        for j in 0..mixture.k() {
            let g = gamma[(i, j)];
            if g > 0.0 {
                q += is_weights[i] * g * buf[j];
            }
        }
    }
    q
}

/// Runs `iters` EM iterations starting from `mixture`.
pub fn run_em(
    samples: &SampleSet,
    is_weights: &[f64],
    mut mixture: GaussianMixture,
    iters: usize,
    cov_jitter: f64,
    min_weight: f64,
) -> Result<GaussianMixture> {
    for _ in 0..iters {
        let gamma = responsibilities(samples, &mixture)?;
        mixture = em_update(samples, is_weights, &gamma, cov_jitter, min_weight)?;
    }
    Ok(mixture)
}

/// Mixture seeded by one hard assignment step.
///
/// Up to `k` centres are drawn by D^2 seeding (distances scaled by the
/// pooled variance), every sample joins its nearest centre, and a weighted
/// M-step turns the clusters into components. Clusters too small to carry a
/// covariance get the pooled one.
pub fn initial_mixture(
    samples: &SampleSet,
    is_weights: &[f64],
    k: usize,
    cov_jitter: f64,
    rng: &mut RngStream,
) -> Result<GaussianMixture> {
    let n = samples.len();
    let d = samples.dim();
    if n == 0 {
        return Err(CvisError::EmDegenerate("no samples to initialise from".into()));
    }
    let ones = DMatrix::from_element(n, 1, 1.0);
    let pooled = em_update(samples, is_weights, &ones, cov_jitter, 0.0)?;
    let mut pooled_cov = pooled.covariances()[0].clone();
    if pooled_cov.clone().cholesky().is_none() {
        pooled_cov += DMatrix::identity(d, d) * variance_scale(samples, is_weights).max(1e-12);
    }
    let inv_var: Vec<f64> = (0..d).map(|a| 1.0 / pooled_cov[(a, a)]).collect();
    let dist2 = |x: &[f64], y: &[f64]| -> f64 { (0..d).map(|a| (x[a] - y[a]).powi(2) * inv_var[a]).sum() };

    let mut centres = vec![rng.random_range(0..n)];
    let mut nearest: Vec<f64> = samples.iter().map(|z| dist2(z, samples.point(centres[0]))).collect();
    while centres.len() < k.min(n) {
        let total: f64 = nearest.iter().sum();
        if !(total > 0.0) {
            break;
        }
        let mut u = rng.random::<f64>() * total;
        let mut pick = n - 1;
        for (i, &w) in nearest.iter().enumerate() {
            if u < w {
                pick = i;
                break;
            }
            u -= w;
        }
        centres.push(pick);
        for (i, z) in samples.iter().enumerate() {
            nearest[i] = nearest[i].min(dist2(z, samples.point(pick)));
        }
    }

    let kc = centres.len();
    let mut gamma = DMatrix::zeros(n, kc);
    let mut sizes = vec![0usize; kc];
    for (i, z) in samples.iter().enumerate() {
        let j = (0..kc)
            .min_by(|&a, &b| dist2(z, samples.point(centres[a])).total_cmp(&dist2(z, samples.point(centres[b]))))
            .unwrap();
        gamma[(i, j)] = 1.0;
        sizes[j] += 1;
    }
    let hard = match em_update(samples, is_weights, &gamma, cov_jitter, 0.0) {
        Ok(g) => g,
        Err(_) => return GaussianMixture::single(pooled.means()[0].clone(), pooled_cov),
    };
    // em_update drops clusters without weight; re-align the surviving sizes.
    let nu: Vec<f64> = (0..kc)
        .map(|j| (0..n).map(|i| is_weights[i] * gamma[(i, j)]).sum())
        .collect();
    let surviving: Vec<usize> = (0..kc).filter(|&j| nu[j] > 0.0).collect();
    let covs = hard
        .covariances()
        .iter()
        .zip(&surviving)
        .map(|(c, &j)| {
            if sizes[j] > d && c.clone().cholesky().is_some() {
                c.clone()
            } else {
                pooled_cov.clone()
            }
        })
        .collect();
    GaussianMixture::new(hard.weights().to_vec(), hard.means().to_vec(), covs)
}

/// Diagnostics of one cross-entropy level.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CeLevel {
    pub threshold: f64,
    pub n_elite: usize,
    /// Kish effective sample size of the elite weights.
    pub ess: f64,
    pub k: usize,
}

#[derive(Debug, Clone)]
pub struct CeFit {
    pub mixture: GaussianMixture,
    pub levels: Vec<CeLevel>,
}

/// Multilevel cross-entropy fit of the optimal importance density of
/// `model`'s failure set under `p`.
///
/// Level thresholds are the `tau`-quantile of the limit state, clipped at
/// zero and never allowed to increase. The first level samples `p` itself.
pub fn ce_fit(model: &Model, p: &Density, cfg: &EmConfig, rng: &mut RngStream) -> Result<CeFit> {
    cfg.validate(p.dim())?;
    let mut current: Option<GaussianMixture> = None;
    let mut previous = f64::INFINITY;
    let mut levels = Vec::new();
    for level in 0..cfg.max_levels {
        let proposal = match &current {
            Some(g) => Density::Mixture(g.clone()),
            None => p.clone(),
        };
        let z = proposal.sample(rng, cfg.n_s)?;
        let g: Vec<f64> = model
            .qois(&z)?
            .into_iter()
            .map(|q| model.threshold() - q)
            .collect();
        let mut sorted = g.clone();
        sorted.sort_by(f64::total_cmp);
        let idx = ((cfg.tau * cfg.n_s as f64).ceil() as usize).clamp(1, cfg.n_s) - 1;
        let threshold = sorted[idx].max(0.0).min(previous);
        let elite: Vec<usize> = (0..g.len()).filter(|&i| g[i] <= threshold).collect();
        let elite_set = z.select(&elite);
        let weights: Vec<f64> = if current.is_some() {
            elite_set
                .iter()
                .map(|x| Ok((p.log_pdf(x)? - proposal.log_pdf(x)?).exp()))
                .collect::<Result<_>>()?
        } else {
            vec![1.0; elite.len()]
        };
        let start = match current.take() {
            Some(g) => g,
            None => initial_mixture(&elite_set, &weights, cfg.k_init, cfg.cov_jitter, rng)?,
        };
        let fitted = run_em(&elite_set, &weights, start, cfg.em_iters, cfg.cov_jitter, cfg.min_weight)?;
        let sw: f64 = weights.iter().sum();
        let sw2: f64 = weights.iter().map(|w| w * w).sum();
        levels.push(CeLevel {
            threshold,
            n_elite: elite.len(),
            ess: sw * sw / sw2,
            k: fitted.k(),
        });
        previous = threshold;
        if threshold <= 0.0 {
            return Ok(CeFit {
                mixture: fitted,
                levels,
            });
        }
        current = Some(fitted);
        if level + 1 == cfg.max_levels {
            return Err(CvisError::CeNotConverged {
                levels: level + 1,
                threshold,
                mixture: Box::new(current.take().unwrap()),
            });
        }
    }
    unreachable!("max_levels is validated to be positive")
}
