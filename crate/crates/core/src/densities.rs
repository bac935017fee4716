//! Probability densities, sampling, density ratios and KL estimates.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::models::Model;
use crate::rng::RngStream;
use crate::stats::{mean, sample_variance};
use crate::{CvisError, Result};

/// Default cap on proposals spent per accepted rejection sample.
pub const DEFAULT_MAX_PROPOSALS: u64 = 10_000_000;

/// `n` points in `d` dimensions, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    dim: usize,
    data: Vec<f64>,
}

impl SampleSet {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            data: Vec::new(),
        }
    }

    pub fn with_capacity(dim: usize, n: usize) -> Self {
        Self {
            dim,
            data: Vec::with_capacity(dim * n),
        }
    }

    pub fn from_rows(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || data.len() % dim != 0 {
            return Err(CvisError::LengthMismatch(format!(
                "{} values do not form rows of length {dim}",
                data.len()
            )));
        }
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn push(&mut self, z: &[f64]) {
        assert_eq!(z.len(), self.dim, "point dimension mismatch");
        self.data.extend_from_slice(z);
    }

    pub fn extend(&mut self, other: &SampleSet) {
        assert_eq!(other.dim, self.dim, "sample set dimension mismatch");
        self.data.extend_from_slice(&other.data);
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> SampleSet {
        let mut out = SampleSet::with_capacity(self.dim, indices.len());
        for &i in indices {
            out.push(self.point(i));
        }
        out
    }

    /// Rows `start..end`.
    pub fn slice(&self, start: usize, end: usize) -> SampleSet {
        SampleSet {
            dim: self.dim,
            data: self.data[start * self.dim..end * self.dim].to_vec(),
        }
    }
}

/// Serialised form of a mixture.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct MixtureDocument {
    d: usize,
    k: usize,
    weights: Vec<f64>,
    means: Vec<Vec<f64>>,
    covariances: Vec<Vec<Vec<f64>>>,
}

/// Finite mixture of multivariate normals with Cholesky-factored covariances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MixtureDocument", into = "MixtureDocument")]
pub struct GaussianMixture {
    dim: usize,
    weights: Vec<f64>,
    means: Vec<DVector<f64>>,
    covariances: Vec<DMatrix<f64>>,
    chol: Vec<DMatrix<f64>>,
    log_norm: Vec<f64>,
}

impl TryFrom<MixtureDocument> for GaussianMixture {
    type Error = CvisError;

    fn try_from(doc: MixtureDocument) -> Result<Self> {
        if doc.weights.len() != doc.k || doc.means.len() != doc.k || doc.covariances.len() != doc.k {
            return Err(CvisError::LengthMismatch(format!(
                "mixture document declares k={} but lists {} weights, {} means, {} covariances",
                doc.k,
                doc.weights.len(),
                doc.means.len(),
                doc.covariances.len()
            )));
        }
        let d = doc.d;
        let mut means = Vec::with_capacity(doc.k);
        let mut covs = Vec::with_capacity(doc.k);
        for (m, c) in doc.means.iter().zip(&doc.covariances) {
            if m.len() != d || c.len() != d || c.iter().any(|row| row.len() != d) {
                return Err(CvisError::DimensionMismatch {
                    expected: d,
                    got: m.len(),
                });
            }
            means.push(DVector::from_column_slice(m));
            covs.push(DMatrix::from_fn(d, d, |i, j| c[i][j]));
        }
        GaussianMixture::new(doc.weights, means, covs)
    }
}

impl From<GaussianMixture> for MixtureDocument {
    fn from(g: GaussianMixture) -> Self {
        let d = g.dim;
        MixtureDocument {
            d,
            k: g.weights.len(),
            means: g.means.iter().map(|m| m.iter().copied().collect()).collect(),
            covariances: g
                .covariances
                .iter()
                .map(|c| (0..d).map(|i| (0..d).map(|j| c[(i, j)]).collect()).collect())
                .collect(),
            weights: g.weights,
        }
    }
}

impl GaussianMixture {
    /// Validates weights and factors every covariance.
    ///
    /// Weights must lie in `[0, 1]` and sum to one within 1e-12; they are
    /// renormalised to remove that residual.
    pub fn new(weights: Vec<f64>, means: Vec<DVector<f64>>, covariances: Vec<DMatrix<f64>>) -> Result<Self> {
        let k = weights.len();
        if k == 0 || means.len() != k || covariances.len() != k {
            return Err(CvisError::LengthMismatch(format!(
                "{k} weights, {} means, {} covariances",
                means.len(),
                covariances.len()
            )));
        }
        if weights.iter().any(|w| !(0.0..=1.0).contains(w)) {
            return Err(CvisError::InvalidWeights(format!("{weights:?} outside [0, 1]")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(CvisError::InvalidWeights(format!("weights sum to {total}")));
        }
        let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let dim = means[0].len();
        let mut chol = Vec::with_capacity(k);
        let mut log_norm = Vec::with_capacity(k);
        for (j, (m, c)) in means.iter().zip(&covariances).enumerate() {
            if m.len() != dim || c.nrows() != dim || c.ncols() != dim {
                return Err(CvisError::DimensionMismatch {
                    expected: dim,
                    got: m.len(),
                });
            }
            let scale = c.amax().max(f64::MIN_POSITIVE);
            if (c - c.transpose()).amax() > 1e-12 * scale {
                return Err(CvisError::NotPositiveDefinite(format!("covariance {j} is not symmetric")));
            }
            let l = c
                .clone()
                .cholesky()
                .ok_or_else(|| CvisError::NotPositiveDefinite(format!("covariance {j} has no Cholesky factor")))?
                .unpack();
            let logdet_half: f64 = (0..dim).map(|i| l[(i, i)].ln()).sum();
            log_norm.push(-0.5 * dim as f64 * (2.0 * PI).ln() - logdet_half);
            chol.push(l);
        }
        Ok(Self {
            dim,
            weights,
            means,
            covariances,
            chol,
            log_norm,
        })
    }

    pub fn single(mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        Self::new(vec![1.0], vec![mean], vec![covariance])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn means(&self) -> &[DVector<f64>] {
        &self.means
    }

    pub fn covariances(&self) -> &[DMatrix<f64>] {
        &self.covariances
    }

    /// `log N(z; mu_j, Sigma_j)`.
    pub fn log_component(&self, j: usize, z: &[f64]) -> f64 {
        let l = &self.chol[j];
        let mu = &self.means[j];
        let d = self.dim;
        // Forward substitution for L y = z - mu, accumulating |y|^2.
        let mut y = [0.0f64; 16];
        let mut heap;
        let y: &mut [f64] = if d <= 16 {
            &mut y[..d]
        } else {
            heap = vec![0.0; d];
            &mut heap
        };
        let mut q = 0.0;
        for i in 0..d {
            let mut s = z[i] - mu[i];
            for k in 0..i {
                s -= l[(i, k)] * y[k];
            }
            y[i] = s / l[(i, i)];
            q += y[i] * y[i];
        }
        self.log_norm[j] - 0.5 * q
    }

    /// Fills `out[j] = log pi_j + log N_j(z)` and returns their log-sum-exp.
    pub fn log_weighted_components(&self, z: &[f64], out: &mut [f64]) -> f64 {
        for j in 0..self.k() {
            out[j] = if self.weights[j] > 0.0 {
                self.weights[j].ln() + self.log_component(j, z)
            } else {
                f64::NEG_INFINITY
            };
        }
        log_sum_exp(&out[..self.k()])
    }

    pub fn log_pdf(&self, z: &[f64]) -> f64 {
        let mut buf = vec![0.0; self.k()];
        self.log_weighted_components(z, &mut buf)
    }

    /// Draws one point into `out`, returning the chosen component.
    pub fn sample_point(&self, rng: &mut RngStream, out: &mut [f64]) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut j = self.k() - 1;
        for (i, w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                j = i;
                break;
            }
        }
        let d = self.dim;
        let eps: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let l = &self.chol[j];
        for i in 0..d {
            let mut s = self.means[j][i];
            for k in 0..=i {
                s += l[(i, k)] * eps[k];
            }
            out[i] = s;
        }
        j
    }
}

/// Numerically stable `log sum exp(v)`.
pub fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    if m == f64::INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// A base density restricted to a model's failure set `{g < 0}`.
#[derive(Debug, Clone)]
pub struct ConditionalDensity {
    pub base: Density,
    pub model: Model,
    /// `P_base(g < 0)`, the normalising constant.
    pub probability: f64,
    pub max_proposals: u64,
}

/// Densities over `R^d` used as inputs and proposals.
#[derive(Debug, Clone)]
pub enum Density {
    StandardNormal { dim: usize },
    UniformBox { lo: Vec<f64>, hi: Vec<f64> },
    Mixture(GaussianMixture),
    /// Exact optimal importance density for an indicator target.
    Conditional(Box<ConditionalDensity>),
}

impl Density {
    pub fn standard_normal(dim: usize) -> Self {
        Density::StandardNormal { dim }
    }

    pub fn uniform_box(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(CvisError::LengthMismatch(format!(
                "box bounds of lengths {} and {}",
                lo.len(),
                hi.len()
            )));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(CvisError::InvalidInput("box needs lo < hi in every coordinate".into()));
        }
        Ok(Density::UniformBox { lo, hi })
    }

    /// `base` conditioned on `model.indicator(z) = 1`; `probability` is the
    /// exact mass of that set under `base`.
    pub fn conditional(base: Density, model: Model, probability: f64) -> Result<Self> {
        if !(probability > 0.0 && probability <= 1.0) {
            return Err(CvisError::InvalidInput(format!(
                "conditioning set needs positive probability, got {probability}"
            )));
        }
        if base.dim() != model.dim() {
            return Err(CvisError::DimensionMismatch {
                expected: base.dim(),
                got: model.dim(),
            });
        }
        Ok(Density::Conditional(Box::new(ConditionalDensity {
            base,
            model,
            probability,
            max_proposals: DEFAULT_MAX_PROPOSALS,
        })))
    }

    pub fn dim(&self) -> usize {
        match self {
            Density::StandardNormal { dim } => *dim,
            Density::UniformBox { lo, .. } => lo.len(),
            Density::Mixture(g) => g.dim(),
            Density::Conditional(c) => c.base.dim(),
        }
    }

    pub fn log_pdf(&self, z: &[f64]) -> Result<f64> {
        if z.len() != self.dim() {
            return Err(CvisError::DimensionMismatch {
                expected: self.dim(),
                got: z.len(),
            });
        }
        Ok(match self {
            Density::StandardNormal { dim } => {
                let q: f64 = z.iter().map(|x| x * x).sum();
                -0.5 * (*dim as f64) * (2.0 * PI).ln() - 0.5 * q
            }
            Density::UniformBox { lo, hi } => {
                let inside = z.iter().zip(lo.iter().zip(hi)).all(|(x, (a, b))| x >= a && x <= b);
                if inside {
                    -lo.iter().zip(hi).map(|(a, b)| (b - a).ln()).sum::<f64>()
                } else {
                    f64::NEG_INFINITY
                }
            }
            Density::Mixture(g) => g.log_pdf(z),
            Density::Conditional(c) => {
                if c.model.indicator(z)? == 1.0 {
                    c.base.log_pdf(z)? - c.probability.ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
        })
    }

    pub fn pdf(&self, z: &[f64]) -> Result<f64> {
        Ok(self.log_pdf(z)?.exp())
    }

    pub fn sample(&self, rng: &mut RngStream, n: usize) -> Result<SampleSet> {
        let d = self.dim();
        let mut out = SampleSet::with_capacity(d, n);
        let mut z = vec![0.0; d];
        match self {
            Density::StandardNormal { .. } => {
                for _ in 0..n {
                    z.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
                    out.push(&z);
                }
            }
            Density::UniformBox { lo, hi } => {
                for _ in 0..n {
                    for (v, (a, b)) in z.iter_mut().zip(lo.iter().zip(hi)) {
                        *v = a + (b - a) * rng.random::<f64>();
                    }
                    out.push(&z);
                }
            }
            Density::Mixture(g) => {
                for _ in 0..n {
                    g.sample_point(rng, &mut z);
                    out.push(&z);
                }
            }
            Density::Conditional(c) => {
                return Ok(rejection_sample_with_limit(&c.model, &c.base, rng, n, c.max_proposals)?.0);
            }
        }
        Ok(out)
    }
}

/// `p(z) / q(z)` computed as `exp(log p - log q)`.
pub fn density_ratio(p: &Density, q: &Density, z: &[f64]) -> Result<f64> {
    let lq = q.log_pdf(z)?;
    if lq == f64::NEG_INFINITY {
        return Err(CvisError::UnsupportedPoint);
    }
    let lp = p.log_pdf(z)?;
    Ok((lp - lq).exp())
}

/// Exact draws from `p` restricted to `{g < 0}` by plain rejection.
pub fn rejection_sample(model: &Model, p: &Density, rng: &mut RngStream, n: usize) -> Result<SampleSet> {
    Ok(rejection_sample_with_limit(model, p, rng, n, DEFAULT_MAX_PROPOSALS)?.0)
}

/// As [`rejection_sample`], also returning the total number of proposals.
pub fn rejection_sample_with_limit(
    model: &Model,
    p: &Density,
    rng: &mut RngStream,
    n: usize,
    max_proposals: u64,
) -> Result<(SampleSet, u64)> {
    let mut out = SampleSet::with_capacity(p.dim(), n);
    let mut total = 0u64;
    for _ in 0..n {
        let mut tries = 0u64;
        loop {
            if tries >= max_proposals {
                return Err(CvisError::IntractableTarget { proposals: tries });
            }
            tries += 1;
            let z = p.sample(rng, 1)?;
            if model.indicator(z.point(0))? == 1.0 {
                out.extend(&z);
                break;
            }
        }
        total += tries;
    }
    Ok((out, total))
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
}

/// `E_{q_ref}[log q_ref - log q_approx]` from `n` draws of `q_ref`.
pub fn kl_divergence_mc(q_ref: &Density, q_approx: &Density, rng: &mut RngStream, n: usize) -> Result<McEstimate> {
    if n < 2 {
        return Err(CvisError::InvalidInput("KL estimate needs at least two samples".into()));
    }
    let z = q_ref.sample(rng, n)?;
    let mut terms = Vec::with_capacity(n);
    for x in z.iter() {
        let la = q_approx.log_pdf(x)?;
        if la == f64::NEG_INFINITY {
            return Err(CvisError::UnsupportedPoint);
        }
        terms.push(q_ref.log_pdf(x)? - la);
    }
    Ok(McEstimate {
        value: mean(&terms),
        std_error: (sample_variance(&terms) / n as f64).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_pdf_reference_values() {
        let n = Density::standard_normal(1);
        assert!((n.log_pdf(&[0.0]).unwrap() - 0.398_942_280_401_432_7f64.ln()).abs() < 1e-15);
        let u = Density::uniform_box(vec![0.0], vec![1.0]).unwrap();
        assert_eq!(u.log_pdf(&[0.5]).unwrap(), 0.0);
        let g = GaussianMixture::single(DVector::from_element(1, 0.0), DMatrix::identity(1, 1)).unwrap();
        assert!((Density::Mixture(g).log_pdf(&[0.0]).unwrap() - n.log_pdf(&[0.0]).unwrap()).abs() < 1e-15);
        assert!(n.log_pdf(&[0.0, 1.0]).is_err());
    }

    #[test]
    fn mixture_rejects_bad_parameters() {
        let m = vec![DVector::from_element(1, 0.0); 2];
        let c = vec![DMatrix::identity(1, 1); 2];
        assert!(GaussianMixture::new(vec![0.5, 0.6], m.clone(), c.clone()).is_err());
        let bad = vec![DMatrix::identity(1, 1), DMatrix::from_element(1, 1, -1.0)];
        assert!(matches!(
            GaussianMixture::new(vec![0.5, 0.5], m, bad),
            Err(CvisError::NotPositiveDefinite(_))
        ));
    }

    #[test]
    fn log_sum_exp_handles_extremes() {
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY, f64::NEG_INFINITY]), f64::NEG_INFINITY);
        assert!((log_sum_exp(&[-1000.0, -1000.0]) - (-1000.0 + 2f64.ln())).abs() < 1e-12);
    }
}
