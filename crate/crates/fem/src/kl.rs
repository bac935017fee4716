//! Karhunen-Loeve expansion of a zero-mean, unit-variance Gaussian field on a
//! rectangle with the separable kernel `exp(-(dx/r1)^2 - (dy/r2)^2)`.

use nalgebra::{DMatrix, SymmetricEigen};
use libm::erfc;

use crate::quadrature::{BarycentricInterpolant, GaussLegendre};
use crate::{FemError, Result};

/// Leading eigenpairs of the 1D Gaussian-kernel integral operator on `[0, L]`.
#[derive(Debug, Clone)]
pub struct KlEigenpairs1d {
    pub domain_length: f64,
    pub corr_length: f64,
    /// Retained eigenvalues, decreasing.
    pub eigenvalues: Vec<f64>,
    /// Every eigenvalue of the discrete operator, decreasing.
    pub all_eigenvalues: Vec<f64>,
    /// `node_values[k][i]` is the k-th eigenfunction at quadrature node `i`.
    pub node_values: Vec<Vec<f64>>,
    pub rule: GaussLegendre,
    interp: BarycentricInterpolant,
}

/// Nystrom discretisation on `n_quad` Gauss-Legendre nodes.
///
/// Eigenfunctions have unit L2 norm under the quadrature rule and are
/// signed so that their value at `x = 0` is non-negative. Eigenvalues at
/// the level of roundoff that come out negative are reported as zero.
pub fn kl_eigenpairs_1d(
    corr_length: f64,
    domain_length: f64,
    n_quad: usize,
    n_modes: usize,
) -> Result<KlEigenpairs1d> {
    if !(corr_length > 0.0 && corr_length.is_finite()) {
        return Err(FemError::InvalidInput(format!(
            "correlation length must be positive, got {corr_length}"
        )));
    }
    if !(domain_length > 0.0 && domain_length.is_finite()) {
        return Err(FemError::InvalidInput(format!(
            "domain length must be positive, got {domain_length}"
        )));
    }
    if n_quad == 0 || n_modes == 0 || n_modes > n_quad {
        return Err(FemError::InvalidInput(format!(
            "need 1 <= n_modes <= n_quad, got n_modes={n_modes}, n_quad={n_quad}"
        )));
    }
    let rule = GaussLegendre::on_interval(n_quad, 0.0, domain_length);
    let sw: Vec<f64> = rule.weights.iter().map(|w| w.sqrt()).collect();
    let a = DMatrix::from_fn(n_quad, n_quad, |i, j| {
        let d = (rule.nodes[i] - rule.nodes[j]) / corr_length;
        sw[i] * (-d * d).exp() * sw[j]
    });
    let eig = SymmetricEigen::try_new(a, f64::EPSILON, 0).ok_or(FemError::EigenSolve)?;
    let mut order: Vec<usize> = (0..n_quad).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));

    let interp = BarycentricInterpolant::for_rule(&rule, 0.0, domain_length);
    let all_eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k].max(0.0)).collect();
    let mut node_values = Vec::with_capacity(n_modes);
    for &k in order.iter().take(n_modes) {
        let mut psi: Vec<f64> = (0..n_quad)
            .map(|i| eig.eigenvectors[(i, k)] / sw[i])
            .collect();
        if interp.eval(&psi, 0.0) < 0.0 {
            psi.iter_mut().for_each(|v| *v = -*v);
        }
        node_values.push(psi);
    }
    Ok(KlEigenpairs1d {
        domain_length,
        corr_length,
        eigenvalues: all_eigenvalues[..n_modes].to_vec(),
        all_eigenvalues,
        node_values,
        rule,
        interp,
    })
}

impl KlEigenpairs1d {
    pub fn n_modes(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Eigenfunction `k` at `x`, which must lie in `[0, L]`.
    pub fn eval(&self, k: usize, x: f64) -> f64 {
        self.interp.eval(&self.node_values[k], x)
    }

    /// Quadrature approximation of `int psi_k psi_l`.
    pub fn inner_product(&self, k: usize, l: usize) -> f64 {
        self.rule
            .weights
            .iter()
            .zip(&self.node_values[k])
            .zip(&self.node_values[l])
            .map(|((w, a), b)| w * a * b)
            .sum()
    }
}

/// Product modes `psi_i(x) = psi_{i1}(x) psi_{i2}(y)` sorted by decreasing
/// eigenvalue and truncated to the strictly positive leading ones.
#[derive(Debug, Clone)]
pub struct KlBasis {
    pub x: KlEigenpairs1d,
    pub y: KlEigenpairs1d,
    /// Per-direction mode indices of each retained product mode.
    pub modes: Vec<(usize, usize)>,
    pub eigenvalues: Vec<f64>,
    total_energy: f64,
}

impl KlBasis {
    /// `n_per_direction` 1D modes in each direction, `n_kl` product modes kept.
    pub fn new(
        corr_lengths: (f64, f64),
        dims: (f64, f64),
        n_quad: usize,
        n_per_direction: usize,
        n_kl: usize,
    ) -> Result<Self> {
        if n_kl == 0 || n_kl > n_per_direction * n_per_direction {
            return Err(FemError::InvalidInput(format!(
                "cannot keep {n_kl} product modes from {n_per_direction} per direction"
            )));
        }
        let x = kl_eigenpairs_1d(corr_lengths.0, dims.0, n_quad, n_per_direction)?;
        let y = kl_eigenpairs_1d(corr_lengths.1, dims.1, n_quad, n_per_direction)?;
        let mut products: Vec<(f64, (usize, usize))> = Vec::new();
        for i in 0..n_per_direction {
            for j in 0..n_per_direction {
                products.push((x.eigenvalues[i] * y.eigenvalues[j], (i, j)));
            }
        }
        products.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let kept: Vec<_> = products
            .into_iter()
            .take(n_kl)
            .filter(|(lam, _)| *lam > 0.0)
            .collect();
        if kept.len() < n_kl {
            return Err(FemError::InvalidInput(format!(
                "only {} product modes have positive eigenvalues, {n_kl} requested",
                kept.len()
            )));
        }
        let total_energy =
            x.all_eigenvalues.iter().sum::<f64>() * y.all_eigenvalues.iter().sum::<f64>();
        Ok(Self {
            eigenvalues: kept.iter().map(|p| p.0).collect(),
            modes: kept.iter().map(|p| p.1).collect(),
            x,
            y,
            total_energy,
        })
    }

    pub fn n_kl(&self) -> usize {
        self.modes.len()
    }

    pub fn dims(&self) -> (f64, f64) {
        (self.x.domain_length, self.y.domain_length)
    }

    /// Fraction of the discrete field's total variance captured by the kept modes.
    pub fn truncation_energy(&self) -> f64 {
        self.eigenvalues.iter().sum::<f64>() / self.total_energy
    }

    fn check_point(&self, p: [f64; 2]) -> Result<()> {
        let (lx, ly) = self.dims();
        let tol = 1e-12;
        let inside = |v: f64, l: f64| v >= -tol * l && v <= l * (1.0 + tol);
        if inside(p[0], lx) && inside(p[1], ly) {
            Ok(())
        } else {
            Err(FemError::OutOfDomain {
                x: p[0],
                y: p[1],
                lx,
                ly,
            })
        }
    }

    /// `sqrt(lambda_i) psi_i(p)` for every kept mode.
    pub fn scaled_modes_at(&self, p: [f64; 2]) -> Result<Vec<f64>> {
        self.check_point(p)?;
        let px: Vec<f64> = (0..self.x.n_modes()).map(|k| self.x.eval(k, p[0])).collect();
        let py: Vec<f64> = (0..self.y.n_modes()).map(|k| self.y.eval(k, p[1])).collect();
        Ok(self
            .modes
            .iter()
            .zip(&self.eigenvalues)
            .map(|(&(i, j), lam)| lam.sqrt() * px[i] * py[j])
            .collect())
    }

    /// Field value `sum_i sqrt(lambda_i) xi_i psi_i(p)`.
    pub fn eval(&self, xi: &[f64], p: [f64; 2]) -> Result<f64> {
        if xi.len() != self.n_kl() {
            return Err(FemError::InvalidInput(format!(
                "expected {} KL coefficients, got {}",
                self.n_kl(),
                xi.len()
            )));
        }
        Ok(self
            .scaled_modes_at(p)?
            .iter()
            .zip(xi)
            .map(|(m, x)| m * x)
            .sum())
    }

    /// Variance of the truncated field at `p`.
    pub fn pointwise_variance(&self, p: [f64; 2]) -> Result<f64> {
        Ok(self.scaled_modes_at(p)?.iter().map(|m| m * m).sum())
    }
}

/// Maps a standard-normal field value onto `U(a, b)`: `a + (b - a) Phi(y)`.
pub fn young_modulus(y: f64, a: f64, b: f64) -> f64 {
    a + (b - a) * 0.5 * erfc(-y / std::f64::consts::SQRT_2)
}
