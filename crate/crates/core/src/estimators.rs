//! Monte Carlo, importance sampling, control-variate and ensemble estimators.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::densities::{Density, SampleSet};
use crate::models::{Model, ModelPair};
use crate::rng::RngStream;
use crate::stats::{mean, sample_covariance, sample_variance};
use crate::theory::{f_matrix, solve_checked, Scheme};
use crate::{CvisError, Result};

/// Relative size below which a weight denominator counts as zero.
const DENOMINATOR_EPS: f64 = 1e-14;

/// A plain sample-mean estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub estimate: f64,
    /// Estimated variance of `estimate`.
    pub variance: f64,
    pub n: usize,
    pub cost: f64,
}

impl Estimate {
    /// Sample mean and `sample variance / n`.
    pub fn from_values(values: &[f64], cost: f64) -> Self {
        let n = values.len();
        Self {
            estimate: mean(values),
            variance: if n > 1 { sample_variance(values) / n as f64 } else { 0.0 },
            n,
            cost,
        }
    }
}

/// Plain Monte Carlo with `n` draws of `p`.
pub fn mc_estimate(model: &Model, p: &Density, rng: &mut RngStream, n: usize) -> Result<Estimate> {
    if n < 2 {
        return Err(CvisError::InvalidInput("Monte Carlo needs n >= 2".into()));
    }
    let z = p.sample(rng, n)?;
    let values = model.values(&z)?;
    Ok(Estimate::from_values(&values, n as f64 * model.cost()))
}

/// `Y(z_i) p(z_i) / q(z_i)` at every sample.
pub fn is_values(model: &Model, p: &Density, q: &Density, samples: &SampleSet) -> Result<Vec<f64>> {
    (0..samples.len())
        .into_par_iter()
        .map(|i| {
            let z = samples.point(i);
            let lq = q.log_pdf(z)?;
            if lq == f64::NEG_INFINITY {
                return Err(CvisError::UnsupportedPoint);
            }
            Ok(model.value(z)? * (p.log_pdf(z)? - lq).exp())
        })
        .collect()
}

/// Importance-sampling estimate with its per-sample weighted values.
#[derive(Debug, Clone, PartialEq)]
pub struct IsEstimate {
    pub estimate: Estimate,
    pub values: Vec<f64>,
}

/// Importance sampling with `n` draws of `q`.
pub fn is_estimate(model: &Model, p: &Density, q: &Density, rng: &mut RngStream, n: usize) -> Result<IsEstimate> {
    let z = q.sample(rng, n)?;
    let values = is_values(model, p, q, &z)?;
    Ok(IsEstimate {
        estimate: Estimate::from_values(&values, n as f64 * model.cost()),
        values,
    })
}

/// `Q_0 + alpha^T (Q - mu)` from per-sample values on shared samples.
pub fn cv_estimate(baseline: &[f64], controls: &[Vec<f64>], known_means: &[f64], alpha: &[f64]) -> Result<f64> {
    if controls.len() != known_means.len() || controls.len() != alpha.len() {
        return Err(CvisError::LengthMismatch(format!(
            "{} controls, {} means, {} weights",
            controls.len(),
            known_means.len(),
            alpha.len()
        )));
    }
    if let Some(c) = controls.iter().find(|c| c.len() != baseline.len()) {
        return Err(CvisError::LengthMismatch(format!(
            "control has {} samples, baseline {}",
            c.len(),
            baseline.len()
        )));
    }
    let mut est = mean(baseline);
    for ((c, mu), a) in controls.iter().zip(known_means).zip(alpha) {
        est += a * (mean(c) - mu);
    }
    Ok(est)
}

/// Ensemble layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BatchPlan {
    /// Number of independent batches.
    pub k: usize,
    /// Shared samples per batch.
    pub n: usize,
    /// Extra low-fidelity samples per batch (IS hybrids).
    pub m: usize,
    /// Per-model ratios of low- to high-fidelity samples (Monte Carlo ACV).
    pub ratios: Vec<f64>,
    pub scheme: Scheme,
}

impl Default for BatchPlan {
    fn default() -> Self {
        Self {
            k: 100,
            n: 1,
            m: 0,
            ratios: Vec::new(),
            scheme: Scheme::Cv,
        }
    }
}

impl BatchPlan {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(CvisError::InvalidInput(format!("need K >= 2 batches, got {}", self.k)));
        }
        if self.n == 0 {
            return Err(CvisError::InvalidInput("need n >= 1 samples per batch".into()));
        }
        Ok(())
    }
}

/// Per-batch estimator values: `q` is `K x (M+1)` (column 0 high fidelity),
/// `q_prime` the `K x M` estimates of the control means.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchMatrix {
    pub q: DMatrix<f64>,
    pub q_prime: Option<DMatrix<f64>>,
}

impl BatchMatrix {
    pub fn k(&self) -> usize {
        self.q.nrows()
    }

    pub fn m(&self) -> usize {
        self.q.ncols() - 1
    }
}

/// Unbiased covariances across batches: `C_hat` among the controls and
/// `c_hat` of each control with column 0.
pub fn sample_cov_batches(b: &BatchMatrix) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let k = b.k();
    if k < 2 {
        return Err(CvisError::InvalidInput(format!("need K >= 2 batches, got {k}")));
    }
    let m = b.m();
    let cols: Vec<Vec<f64>> = (0..=m).map(|j| b.q.column(j).iter().copied().collect()).collect();
    let c = DMatrix::from_fn(m, m, |i, j| sample_covariance(&cols[i + 1], &cols[j + 1]));
    let cv = DVector::from_fn(m, |i, _| sample_covariance(&cols[0], &cols[i + 1]));
    Ok((c, cv))
}

/// `-(C_hat o F)^{-1} (diag(F) o c_hat)`.
pub fn estimated_weight(c_hat: &DMatrix<f64>, c_vec_hat: &DVector<f64>, f: &DMatrix<f64>) -> Result<DVector<f64>> {
    let a = c_hat.component_mul(f);
    let rhs = f.diagonal().component_mul(c_vec_hat);
    solve_checked(&a, &rhs)
        .map(|x| -x)
        .map_err(|_| CvisError::DegenerateCovariance)
}

/// Covariance diagnostics behind an estimated weight.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub c_hat: Vec<Vec<f64>>,
    pub c_vec_hat: Vec<f64>,
    /// True when the weight denominator vanished and `alpha = 0` was used.
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub estimate: f64,
    pub weight: Vec<f64>,
    /// Estimated variance of `estimate`.
    pub variance: f64,
    pub cost: f64,
    #[serde(rename = "K")]
    pub k: usize,
    pub n: usize,
    pub m: usize,
    pub scheme: Scheme,
    #[serde(skip)]
    pub diagnostics: Diagnostics,
    /// The plain high-fidelity estimator on the same shared samples.
    #[serde(skip)]
    pub baseline: f64,
}

/// Per-batch values of the two-model importance-sampling hybrids.
///
/// Batch `b` holds `n` shared proposal samples (both models) followed by
/// `m` extra samples (low fidelity only).
#[derive(Debug, Clone, PartialEq)]
pub struct IsBatches {
    pub k: usize,
    pub n: usize,
    pub m: usize,
    /// `Y_0 W` on the shared samples, batch-major.
    pub y0w: Vec<f64>,
    /// `Y_1 W` on the shared samples.
    pub y1w: Vec<f64>,
    /// `Y_1 W` on the extra samples.
    pub y1w_extra: Vec<f64>,
    pub hf_cost: f64,
    pub lf_cost: f64,
}

/// Batch moments used by both algorithms.
struct BatchMoments {
    q0: Vec<f64>,
    q1: Vec<f64>,
    q1p: Vec<f64>,
}

impl IsBatches {
    fn moments(&self) -> BatchMoments {
        let (n, m) = (self.n, self.m);
        let mut out = BatchMoments {
            q0: Vec::with_capacity(self.k),
            q1: Vec::with_capacity(self.k),
            q1p: Vec::with_capacity(self.k),
        };
        for b in 0..self.k {
            let y0 = &self.y0w[b * n..(b + 1) * n];
            let y1 = &self.y1w[b * n..(b + 1) * n];
            let ex = &self.y1w_extra[b * m..(b + 1) * m];
            out.q0.push(mean(y0));
            let s1: f64 = crate::stats::pairwise_sum(y1);
            out.q1.push(s1 / n as f64);
            out.q1p.push((s1 + crate::stats::pairwise_sum(ex)) / (n + m) as f64);
        }
        out
    }

    /// Online cost of every evaluation in the batches.
    pub fn cost(&self) -> f64 {
        let shared = (self.k * self.n) as f64;
        shared * (self.hf_cost + self.lf_cost) + (self.k * self.m) as f64 * self.lf_cost
    }

    /// Ensemble CV with known `mu1`; `alpha = None` estimates the weight.
    pub fn cv_result(&self, mu1: f64, alpha: Option<f64>) -> Result<EnsembleResult> {
        let mo = self.moments();
        let s0 = sample_variance(&mo.q0);
        let s1 = sample_variance(&mo.q1);
        let c = sample_covariance(&mo.q0, &mo.q1);
        let (a, fallback) = match alpha {
            Some(a) => (a, false),
            None => weight_or_fallback(-c, s1, s0.max(s1)),
        };
        let k = self.k as f64;
        Ok(EnsembleResult {
            estimate: mean(&mo.q0) + a * (mean(&mo.q1) - mu1),
            weight: vec![a],
            variance: ((s0 + a * a * s1 + 2.0 * a * c) / k).max(0.0),
            cost: (self.k * self.n) as f64 * (self.hf_cost + self.lf_cost),
            k: self.k,
            n: self.n,
            m: 0,
            scheme: Scheme::Cv,
            diagnostics: Diagnostics {
                c_hat: vec![vec![s1]],
                c_vec_hat: vec![c],
                fallback,
            },
            baseline: mean(&mo.q0),
        })
    }

    /// Ensemble ACV with the control mean estimated from all `n + m`
    /// low-fidelity values per batch; `alpha = None` estimates the weight.
    pub fn acv_result(&self, alpha: Option<f64>) -> Result<EnsembleResult> {
        let mo = self.moments();
        let s0 = sample_variance(&mo.q0);
        let s1 = sample_variance(&mo.q1);
        let sp = sample_variance(&mo.q1p);
        let c = sample_covariance(&mo.q0, &mo.q1);
        let c0p = sample_covariance(&mo.q0, &mo.q1p);
        let c1p = sample_covariance(&mo.q1, &mo.q1p);
        let den = s1 + sp - 2.0 * c1p;
        let num = c - c0p;
        let (a, fallback) = match alpha {
            Some(a) => (a, false),
            None => weight_or_fallback(-num, den, s0.max(s1).max(sp)),
        };
        let k = self.k as f64;
        Ok(EnsembleResult {
            estimate: mean(&mo.q0) + a * (mean(&mo.q1) - mean(&mo.q1p)),
            weight: vec![a],
            variance: ((s0 + a * a * den + 2.0 * a * num) / k).max(0.0),
            cost: self.cost(),
            k: self.k,
            n: self.n,
            m: self.m,
            scheme: Scheme::AcvIs,
            diagnostics: Diagnostics {
                c_hat: vec![vec![den]],
                c_vec_hat: vec![num],
                fallback,
            },
            baseline: mean(&mo.q0),
        })
    }

    /// The high-fidelity importance-sampling estimate alone.
    pub fn mfis(&self) -> Estimate {
        Estimate::from_values(&self.y0w, (self.k * self.n) as f64 * self.hf_cost)
    }
}

/// `num / den`, or `0` flagged as a fallback when `den` is negligible.
fn weight_or_fallback(num: f64, den: f64, scale: f64) -> (f64, bool) {
    if !(den > DENOMINATOR_EPS * scale) || !den.is_finite() {
        (0.0, true)
    } else {
        (num / den, false)
    }
}

/// Draws `K` batches from `q` and evaluates both models with importance weights.
///
/// Batch `b` uses `rng.child(b)`: shared samples first, then the extras.
pub fn draw_is_batches(pair: &ModelPair, q: &Density, k: usize, n: usize, m: usize, rng: &RngStream) -> Result<IsBatches> {
    if k < 2 || n == 0 {
        return Err(CvisError::InvalidInput(format!("need K >= 2 and n >= 1, got K={k}, n={n}")));
    }
    let batches: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = (0..k)
        .into_par_iter()
        .map(|b| {
            let mut stream = rng.child(b as u64);
            let shared = q.sample(&mut stream, n)?;
            let extra = q.sample(&mut stream, m)?;
            Ok((
                is_values(&pair.hf, &pair.input, q, &shared)?,
                is_values(&pair.lf, &pair.input, q, &shared)?,
                is_values(&pair.lf, &pair.input, q, &extra)?,
            ))
        })
        .collect::<Result<_>>()?;
    let mut out = IsBatches {
        k,
        n,
        m,
        y0w: Vec::with_capacity(k * n),
        y1w: Vec::with_capacity(k * n),
        y1w_extra: Vec::with_capacity(k * m),
        hf_cost: pair.hf.cost(),
        lf_cost: pair.lf.cost(),
    };
    for (a, b, c) in batches {
        out.y0w.extend(a);
        out.y1w.extend(b);
        out.y1w_extra.extend(c);
    }
    Ok(out)
}

/// Ensemble control variate with importance sampling and a known `mu1`.
pub fn ensemble_cv_is(pair: &ModelPair, q: &Density, mu1: f64, plan: &BatchPlan, rng: &RngStream) -> Result<EnsembleResult> {
    plan.validate()?;
    draw_is_batches(pair, q, plan.k, plan.n, 0, rng)?.cv_result(mu1, None)
}

/// Ensemble approximate control variate with importance sampling.
pub fn ensemble_acv_is(pair: &ModelPair, q: &Density, plan: &BatchPlan, rng: &RngStream) -> Result<EnsembleResult> {
    plan.validate()?;
    if plan.m == 0 {
        return Err(CvisError::InvalidInput("ACV needs m >= 1 extra samples".into()));
    }
    draw_is_batches(pair, q, plan.k, plan.n, plan.m, rng)?.acv_result(None)
}

/// Per-batch values for `M + 1` models with Monte Carlo baselines.
///
/// ACV-IS draws a separate extra set of `round(n (r_i - 1))` samples for
/// each control; ACV-MF draws one pool of `round(n (max r - 1))` and
/// control `i` uses its first `round(n (r_i - 1))` points, so the sets are
/// nested. CV draws no extra samples.
pub fn draw_mc_batches(models: &[Model], p: &Density, plan: &BatchPlan, rng: &RngStream) -> Result<(BatchMatrix, f64)> {
    plan.validate()?;
    let m = models.len().checked_sub(1).filter(|&m| m >= 1).ok_or_else(|| {
        CvisError::InvalidInput("need a high-fidelity model and at least one control".into())
    })?;
    let extra: Vec<usize> = match plan.scheme {
        Scheme::Cv => vec![0; m],
        _ => {
            if plan.ratios.len() != m {
                return Err(CvisError::LengthMismatch(format!(
                    "{m} controls but {} sample ratios",
                    plan.ratios.len()
                )));
            }
            if let Some(&r) = plan.ratios.iter().find(|&&r| !(r > 1.0)) {
                return Err(CvisError::InvalidRatio(r));
            }
            plan.ratios
                .iter()
                .map(|r| ((plan.n as f64) * (r - 1.0)).round().max(1.0) as usize)
                .collect()
        }
    };
    let n = plan.n;
    let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..plan.k)
        .into_par_iter()
        .map(|b| {
            let mut stream = rng.child(b as u64);
            let shared = p.sample(&mut stream, n)?;
            let mut q = Vec::with_capacity(m + 1);
            let mut sums = Vec::with_capacity(m + 1);
            for model in models {
                let v = model.values(&shared)?;
                let s = crate::stats::pairwise_sum(&v);
                q.push(s / n as f64);
                sums.push(s);
            }
            let mut qp = Vec::with_capacity(m);
            match plan.scheme {
                Scheme::Cv => {}
                Scheme::AcvIs => {
                    for i in 0..m {
                        let z = p.sample(&mut stream, extra[i])?;
                        let v = models[i + 1].values(&z)?;
                        qp.push((sums[i + 1] + crate::stats::pairwise_sum(&v)) / (n + extra[i]) as f64);
                    }
                }
                Scheme::AcvMf => {
                    let pool = p.sample(&mut stream, *extra.iter().max().unwrap())?;
                    for i in 0..m {
                        let v = models[i + 1].values(&pool.slice(0, extra[i]))?;
                        qp.push((sums[i + 1] + crate::stats::pairwise_sum(&v)) / (n + extra[i]) as f64);
                    }
                }
            }
            Ok((q, qp))
        })
        .collect::<Result<_>>()?;
    let k = plan.k;
    let q = DMatrix::from_fn(k, m + 1, |b, j| rows[b].0[j]);
    let q_prime = match plan.scheme {
        Scheme::Cv => None,
        _ => Some(DMatrix::from_fn(k, m, |b, j| rows[b].1[j])),
    };
    let mut cost = 0.0;
    for model in models {
        cost += (k * n) as f64 * model.cost();
    }
    for (i, e) in extra.iter().enumerate() {
        cost += (k * e) as f64 * models[i + 1].cost();
    }
    Ok((BatchMatrix { q, q_prime }, cost))
}

/// Combines batch values into the ensemble estimate.
///
/// `known_means` is required for CV and ignored otherwise. `alpha = None`
/// estimates the weight from the batches with the scheme's `F`.
pub fn combine_batches(
    batches: &BatchMatrix,
    plan: &BatchPlan,
    known_means: Option<&[f64]>,
    alpha: Option<&[f64]>,
    cost: f64,
) -> Result<EnsembleResult> {
    let k = batches.k();
    let m = batches.m();
    let f = match plan.scheme {
        Scheme::Cv => DMatrix::from_element(m, m, 1.0),
        s => f_matrix(s, &plan.ratios)?,
    };
    let (c_hat, c_vec_hat) = sample_cov_batches(batches)?;
    let weight = match alpha {
        Some(a) => {
            if a.len() != m {
                return Err(CvisError::LengthMismatch(format!("{m} controls, {} weights", a.len())));
            }
            DVector::from_column_slice(a)
        }
        None => estimated_weight(&c_hat, &c_vec_hat, &f)?,
    };
    // Per-batch control deviations.
    let dev = match (plan.scheme, &batches.q_prime) {
        (Scheme::Cv, _) => {
            let mu = known_means.ok_or_else(|| CvisError::InvalidInput("CV needs the control means".into()))?;
            if mu.len() != m {
                return Err(CvisError::LengthMismatch(format!("{m} controls, {} means", mu.len())));
            }
            DMatrix::from_fn(k, m, |b, j| batches.q[(b, j + 1)] - mu[j])
        }
        (_, Some(qp)) => DMatrix::from_fn(k, m, |b, j| batches.q[(b, j + 1)] - qp[(b, j)]),
        (_, None) => return Err(CvisError::InvalidInput("ACV batches need control-mean estimates".into())),
    };
    let per_batch: Vec<f64> = (0..k)
        .map(|b| batches.q[(b, 0)] + (0..m).map(|j| weight[j] * dev[(b, j)]).sum::<f64>())
        .collect();
    let baseline: Vec<f64> = batches.q.column(0).iter().copied().collect();
    Ok(EnsembleResult {
        estimate: mean(&per_batch),
        weight: weight.iter().copied().collect(),
        variance: sample_variance(&per_batch) / k as f64,
        cost,
        k,
        n: plan.n,
        m: 0,
        scheme: plan.scheme,
        diagnostics: Diagnostics {
            c_hat: (0..m).map(|i| c_hat.row(i).iter().copied().collect()).collect(),
            c_vec_hat: c_vec_hat.iter().copied().collect(),
            fallback: false,
        },
        baseline: mean(&baseline),
    })
}

/// General-`M` ensemble (A)CV estimator with Monte Carlo baselines.
pub fn acv_mc_estimate(
    models: &[Model],
    p: &Density,
    plan: &BatchPlan,
    known_means: Option<&[f64]>,
    rng: &RngStream,
) -> Result<EnsembleResult> {
    let (batches, cost) = draw_mc_batches(models, p, plan, rng)?;
    combine_batches(&batches, plan, known_means, None, cost)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_computed_batch_covariance() {
        let q = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 2.0, 2.0, 3.0, 3.0]);
        let (c, cv) = sample_cov_batches(&BatchMatrix { q, q_prime: None }).unwrap();
        assert_eq!(c[(0, 0)], 1.0);
        assert_eq!(cv[0], 1.0);
    }

    #[test]
    fn scalar_weights() {
        let c = DMatrix::from_element(1, 1, 2.0);
        let cv = DVector::from_element(1, -1.0);
        let ones = DMatrix::from_element(1, 1, 1.0);
        assert!((estimated_weight(&c, &cv, &ones).unwrap()[0] - 0.5).abs() < 1e-15);
        let half = DMatrix::from_element(1, 1, 0.5);
        assert!((estimated_weight(&c, &cv, &half).unwrap()[0] - 0.5).abs() < 1e-15);
        let zero = DMatrix::from_element(1, 1, 0.0);
        assert!(matches!(
            estimated_weight(&zero, &cv, &ones),
            Err(CvisError::DegenerateCovariance)
        ));
    }

    #[test]
    fn cv_estimate_edge_cases() {
        let y = vec![1.0, 2.0, 3.0];
        assert_eq!(cv_estimate(&y, &[y.clone()], &[0.0], &[0.0]).unwrap(), 2.0);
        assert_eq!(cv_estimate(&y, &[y.clone()], &[2.5], &[-1.0]).unwrap(), 2.5);
        assert!(cv_estimate(&y, &[vec![1.0]], &[0.0], &[1.0]).is_err());
    }
}
