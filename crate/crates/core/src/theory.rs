//! Closed-form predictions for control-variate ensembles.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{CvisError, Result};

/// Condition-number bound beyond which a linear system counts as singular.
pub const MAX_CONDITION: f64 = 1e12;

/// Sample-sharing scheme of a control-variate estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Control means known exactly.
    Cv,
    /// Independent extra low-fidelity samples per model.
    AcvIs,
    /// Nested extra low-fidelity samples.
    AcvMf,
}

impl Scheme {
    pub fn label(&self) -> &'static str {
        match self {
            Scheme::Cv => "cv",
            Scheme::AcvIs => "acv-is",
            Scheme::AcvMf => "acv-mf",
        }
    }
}

/// Second moments of `(Y_0, Y_1, ..., Y_M)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelStatistics {
    /// Covariance among the low-fidelity models.
    pub c: DMatrix<f64>,
    /// Covariance of each low-fidelity model with `Y_0`.
    pub c_vec: DVector<f64>,
    pub var0: f64,
}

impl ModelStatistics {
    /// Splits a full `(M+1) x (M+1)` covariance, `Y_0` first.
    pub fn from_covariance(full: &DMatrix<f64>) -> Result<Self> {
        let n = full.nrows();
        if n < 2 || full.ncols() != n {
            return Err(CvisError::LengthMismatch(format!(
                "need a square covariance of size >= 2, got {}x{}",
                full.nrows(),
                full.ncols()
            )));
        }
        Ok(Self {
            c: full.view((1, 1), (n - 1, n - 1)).into_owned(),
            c_vec: full.view((1, 0), (n - 1, 1)).column(0).into_owned(),
            var0: full[(0, 0)],
        })
    }

    pub fn m(&self) -> usize {
        self.c_vec.len()
    }

    /// `c / sqrt(var0)`.
    pub fn c_bar(&self) -> DVector<f64> {
        &self.c_vec / self.var0.sqrt()
    }
}

fn check_ratios(r: &[f64]) -> Result<()> {
    match r.iter().find(|&&ri| !(ri > 1.0)) {
        Some(&bad) => Err(CvisError::InvalidRatio(bad)),
        None => Ok(()),
    }
}

/// Sample-sharing matrix `F` for `M = r.len()` low-fidelity models.
///
/// CV ignores the ratios and returns all ones.
pub fn f_matrix(scheme: Scheme, r: &[f64]) -> Result<DMatrix<f64>> {
    let m = r.len();
    if scheme == Scheme::Cv {
        return Ok(DMatrix::from_element(m, m, 1.0));
    }
    check_ratios(r)?;
    let f = |x: f64| (x - 1.0) / x;
    Ok(DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            f(r[i])
        } else {
            match scheme {
                Scheme::AcvIs => f(r[i]) * f(r[j]),
                _ => f(r[i].min(r[j])),
            }
        }
    }))
}

/// Solves `a x = b`, rejecting systems with condition number above
/// [`MAX_CONDITION`].
pub fn solve_checked(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 0.0) || !(smax / smin <= MAX_CONDITION) {
        return Err(CvisError::SingularSystem {
            condition: if smin > 0.0 { smax / smin } else { f64::INFINITY },
        });
    }
    svd.solve(b, 0.0)
        .map_err(|_| CvisError::SingularSystem { condition: f64::INFINITY })
}

pub fn hadamard(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.component_mul(b)
}

/// `u 1^T`, an `len(u) x k` matrix with every column equal to `u`.
pub fn outer_ones(u: &DVector<f64>, k: usize) -> DMatrix<f64> {
    DMatrix::from_fn(u.len(), k, |i, _| u[i])
}

/// Diagonal of a square matrix as a vector.
pub fn diag_vec(a: &DMatrix<f64>) -> DVector<f64> {
    a.diagonal()
}

/// Relative residuals of the four diagonal/Hadamard identities, with
/// `d = diag(a)` (`a` is `M x M`), `b` `M x K`, `v` `K x M` and `x` in `R^K`:
///
/// 1. `d o (b x) = ((d 1^T) o b) x`
/// 2. `((d 1_K^T) o b) v = (d 1_M^T) o (b v)`
/// 3. `v^T (b o (d 1_K^T))^T = (v^T b^T) o (d 1_M^T)^T`
/// 4. `((d 1_K^T) o b)((d 1_K^T) o b)^T = (b b^T) o (d 1_M^T) o (d 1_M^T)^T`
pub fn hadamard_identity_residuals(a: &DMatrix<f64>, b: &DMatrix<f64>, v: &DMatrix<f64>, x: &DVector<f64>) -> Result<[f64; 4]> {
    let m = a.nrows();
    let k = b.ncols();
    if a.ncols() != m || b.nrows() != m || v.shape() != (k, m) || x.len() != k {
        return Err(CvisError::LengthMismatch(format!(
            "a {:?}, b {:?}, v {:?}, x {}",
            a.shape(),
            b.shape(),
            v.shape(),
            x.len()
        )));
    }
    let d = diag_vec(a);
    let dk = outer_ones(&d, k);
    let dm = outer_ones(&d, m);
    let db = hadamard(&dk, b);
    let rel = |lhs: DMatrix<f64>, rhs: DMatrix<f64>| (&lhs - &rhs).norm() / rhs.norm().max(f64::MIN_POSITIVE);
    let bx = b * x;
    Ok([
        rel(DMatrix::from_column_slice(m, 1, d.component_mul(&bx).as_slice()), &db * DMatrix::from_column_slice(k, 1, x.as_slice())),
        rel(&db * v, hadamard(&dm, &(b * v))),
        rel(v.transpose() * hadamard(b, &dk).transpose(), hadamard(&(v.transpose() * b.transpose()), &dm.transpose())),
        rel(&db * db.transpose(), hadamard(&hadamard(&(b * b.transpose()), &dm), &dm.transpose())),
    ])
}

/// `-[C o F]^{-1} (diag(F) o c)`.
pub fn optimal_weight(scheme: Scheme, stats: &ModelStatistics, r: &[f64]) -> Result<DVector<f64>> {
    let f = f_matrix(scheme, &ratios_or_ones(scheme, r, stats.m()))?;
    let rhs = diag_vec(&f).component_mul(&stats.c_vec);
    Ok(-solve_checked(&hadamard(&stats.c, &f), &rhs)?)
}

/// `a^T [C o F]^{-1} a` with `a = diag(F) o c_bar` (CV: `c_bar^T C^{-1} c_bar`).
pub fn r_squared(scheme: Scheme, stats: &ModelStatistics, r: &[f64]) -> Result<f64> {
    let f = f_matrix(scheme, &ratios_or_ones(scheme, r, stats.m()))?;
    let a = diag_vec(&f).component_mul(&stats.c_bar());
    let x = solve_checked(&hadamard(&stats.c, &f), &a)?;
    Ok(a.dot(&x))
}

fn ratios_or_ones(scheme: Scheme, r: &[f64], m: usize) -> Vec<f64> {
    if scheme == Scheme::Cv && r.len() != m {
        vec![f64::INFINITY; m]
    } else {
        r.to_vec()
    }
}

/// Multiplier of `M / (K - M - 2)` in the ensemble variance inflation.
fn inflation_factor(scheme: Scheme, r: Option<f64>) -> Result<f64> {
    match scheme {
        Scheme::Cv | Scheme::AcvIs => Ok(1.0),
        Scheme::AcvMf => {
            let r = r.ok_or_else(|| CvisError::InvalidInput("ACV-MF needs a common ratio r".into()))?;
            if !(r > 1.0) {
                return Err(CvisError::InvalidRatio(r));
            }
            Ok((r - 1.0) / r)
        }
    }
}

/// Predicted `Var(ensemble) / Var(baseline)`:
/// `(1 - R^2) (1 + a M / (K - M - 2))`.
pub fn variance_ratio_prediction(scheme: Scheme, r2: f64, m: usize, k: usize, r: Option<f64>) -> Result<f64> {
    if k <= m + 2 {
        return Err(CvisError::BoundViolated { k, m });
    }
    if !(0.0..=1.0).contains(&r2) {
        return Err(CvisError::InvalidInput(format!("R^2 must lie in [0, 1], got {r2}")));
    }
    let a = inflation_factor(scheme, r)?;
    Ok((1.0 - r2) * (1.0 + a * m as f64 / (k - m - 2) as f64))
}

/// The bound `B` that `K` must exceed for the predicted ratio to drop below `y`.
pub fn ensemble_bound(scheme: Scheme, r2: f64, m: usize, r: Option<f64>, y: f64) -> Result<f64> {
    if !(r2 > 0.0 && r2 <= 1.0) {
        return Err(CvisError::InvalidInput(format!("R^2 must lie in (0, 1], got {r2}")));
    }
    if !(y > 0.0 && y <= 1.0) {
        return Err(CvisError::InvalidInput(format!("target ratio must lie in (0, 1], got {y}")));
    }
    if y + r2 <= 1.0 {
        return Err(CvisError::InfeasibleTarget { y, r2 });
    }
    let a = inflation_factor(scheme, r)?;
    let m = m as f64;
    Ok(m + 2.0 - a * m * (1.0 - r2) / (1.0 - y - r2))
}

/// Smallest integer `K > max(M + 2, B)`.
pub fn min_ensembles(scheme: Scheme, r2: f64, m: usize, r: Option<f64>, y: f64) -> Result<usize> {
    let b = ensemble_bound(scheme, r2, m, r, y)?;
    Ok(b.max(m as f64 + 2.0).floor() as usize + 1)
}

/// Closed interval of weights that do not increase the variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightRange {
    pub lo: f64,
    pub hi: f64,
}

impl WeightRange {
    fn between(a: f64, b: f64) -> Self {
        Self {
            lo: a.min(b),
            hi: a.max(b),
        }
    }

    pub fn contains(&self, alpha: f64) -> bool {
        alpha >= self.lo && alpha <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// CV: endpoints `0` and `-2 cov / var`. ACV with `(s1, s2)`: `0` and `-2 s2 / s1`.
pub fn weight_range(cov: f64, var: f64, acv_terms: Option<(f64, f64)>) -> Result<WeightRange> {
    let (num, den) = acv_terms.map_or((cov, var), |(s1, s2)| (s2, s1));
    if !(den > 0.0) {
        return Err(CvisError::UndefinedRange);
    }
    Ok(WeightRange::between(0.0, -2.0 * num / den))
}

/// `var0 + alpha^2 var1 + 2 alpha cov`; with `acv_terms = (s1, s2)` these
/// replace `(var1, cov)`.
pub fn variance_profile(alpha: f64, var0: f64, var1: f64, cov: f64, acv_terms: Option<(f64, f64)>) -> f64 {
    let (v1, c) = acv_terms.unwrap_or((var1, cov));
    var0 + alpha * alpha * v1 + 2.0 * alpha * c
}

/// Everything predicted for one configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TheoryPrediction {
    pub scheme: Scheme,
    pub m: usize,
    pub k: usize,
    pub f: Vec<Vec<f64>>,
    pub alpha: Vec<f64>,
    pub r_squared: f64,
    pub ratio: f64,
    pub k_min: Option<usize>,
}

/// Builds the full prediction; `r` must be a common ratio for ACV-MF.
pub fn predict(scheme: Scheme, stats: &ModelStatistics, r: &[f64], k: usize) -> Result<TheoryPrediction> {
    let m = stats.m();
    let r_vec = ratios_or_ones(scheme, r, m);
    let f = f_matrix(scheme, &r_vec)?;
    let alpha = optimal_weight(scheme, stats, &r_vec)?;
    let r2 = r_squared(scheme, stats, &r_vec)?;
    let common = match scheme {
        Scheme::AcvMf => {
            if r_vec.windows(2).any(|w| w[0] != w[1]) {
                return Err(CvisError::InvalidInput(
                    "ensemble predictions for ACV-MF need equal ratios".into(),
                ));
            }
            r_vec.first().copied()
        }
        _ => None,
    };
    let ratio = variance_ratio_prediction(scheme, r2, m, k, common)?;
    let k_min = if r2 > 0.0 {
        min_ensembles(scheme, r2, m, common, 1.0).ok()
    } else {
        None
    };
    Ok(TheoryPrediction {
        scheme,
        m,
        k,
        f: (0..m).map(|i| f.row(i).iter().copied().collect()).collect(),
        alpha: alpha.iter().copied().collect(),
        r_squared: r2,
        ratio,
        k_min,
    })
}
