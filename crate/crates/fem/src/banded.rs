//! Symmetric banded storage and an in-place band Cholesky factorisation.

use crate::{FemError, Result};

/// Symmetric matrix stored as its lower band.
///
/// Row `i` keeps columns `i - bandwidth ..= i`; entry `(i, j)` lives at
/// `data[i * (bandwidth + 1) + bandwidth - (i - j)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedSpd {
    n: usize,
    bandwidth: usize,
    data: Vec<f64>,
}

impl BandedSpd {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        let bandwidth = bandwidth.min(n.saturating_sub(1));
        Self {
            n,
            bandwidth,
            data: vec![0.0; n * (bandwidth + 1)],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, 0);
        for i in 0..n {
            m.add(i, i, 1.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    #[inline]
    fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bandwidth);
        i * (self.bandwidth + 1) + self.bandwidth - (i - j)
    }

    /// Entry `(i, j)`; zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bandwidth {
            0.0
        } else {
            self.data[self.index(i, j)]
        }
    }

    /// Adds `value` to the symmetric pair `(i, j)` / `(j, i)`.
    ///
    /// Panics if the entry lies outside the band.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        assert!(
            i - j <= self.bandwidth,
            "entry ({i}, {j}) outside bandwidth {}",
            self.bandwidth
        );
        let k = self.index(i, j);
        self.data[k] += value;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bandwidth);
            for j in lo..=i {
                let a = self.data[self.index(i, j)];
                y[i] += a * x[j];
                if j != i {
                    y[j] += a * x[i];
                }
            }
        }
        y
    }

    /// Factorises in place into `L` with `A = L L^T`.
    pub fn cholesky(mut self) -> Result<BandCholesky> {
        let bw = self.bandwidth;
        let n = self.n;
        for i in 0..n {
            let lo_i = i.saturating_sub(bw);
            for j in lo_i..=i {
                let lo = lo_i.max(j.saturating_sub(bw));
                let ri = i * (bw + 1) + bw - i;
                let rj = j * (bw + 1) + bw - j;
                let sum = self.data[self.index(i, j)]
                    - dot(&self.data[ri + lo..ri + j], &self.data[rj + lo..rj + j]);
                if i == j {
                    if !(sum > 0.0) || !sum.is_finite() {
                        return Err(FemError::NotPositiveDefinite {
                            row: i,
                            pivot: i,
                            value: sum,
                        });
                    }
                    let k = self.index(i, i);
                    self.data[k] = sum.sqrt();
                } else {
                    let d = self.data[self.index(j, j)];
                    let k = self.index(i, j);
                    self.data[k] = sum / d;
                }
            }
        }
        Ok(BandCholesky { factor: self })
    }
}

/// Dot product with four independent accumulators so the loop vectorises.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0; 4];
    let chunks = n / 4;
    for c in 0..chunks {
        let k = 4 * c;
        acc[0] += a[k] * b[k];
        acc[1] += a[k + 1] * b[k + 1];
        acc[2] += a[k + 2] * b[k + 2];
        acc[3] += a[k + 3] * b[k + 3];
    }
    let mut tail = 0.0;
    for k in 4 * chunks..n {
        tail += a[k] * b[k];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Lower-triangular band factor produced by [`BandedSpd::cholesky`].
#[derive(Debug, Clone)]
pub struct BandCholesky {
    factor: BandedSpd,
}

impl BandCholesky {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let l = &self.factor;
        let n = l.n;
        let bw = l.bandwidth;
        assert_eq!(rhs.len(), n);
        let mut y = rhs.to_vec();
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let row = i * (bw + 1) + bw - i;
            let s = y[i] - dot(&l.data[row + lo..row + i], &y[lo..i]);
            y[i] = s / l.data[row + i];
        }
        for i in (0..n).rev() {
            let hi = (i + bw).min(n - 1);
            let mut s = y[i];
            for k in (i + 1)..=hi {
                s -= l.data[l.index(k, i)] * y[k];
            }
            y[i] = s / l.data[l.index(i, i)];
        }
        y
    }
}

/// A stiffness system after elimination of constrained degrees of freedom.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    /// Stiffness over the free equations.
    pub stiffness: BandedSpd,
    /// Load over the free equations.
    pub load: Vec<f64>,
    /// For every global dof, its free-equation number (`None` if constrained).
    pub dof_map: Vec<Option<usize>>,
    /// Prescribed values of the constrained dofs (ignored on free ones).
    pub prescribed: Vec<f64>,
}

impl AssembledSystem {
    pub fn n_dofs(&self) -> usize {
        self.dof_map.len()
    }

    pub fn n_free(&self) -> usize {
        self.load.len()
    }

    /// Solves for the full displacement vector (zeros on constrained dofs).
    pub fn solve(&self) -> Result<Vec<f64>> {
        let factor = self.stiffness.clone().cholesky()?;
        let free = factor.solve(&self.load);
        Ok(self.expand(&free))
    }

    /// Scatters a free-equation vector back to all global dofs.
    pub fn expand(&self, free: &[f64]) -> Vec<f64> {
        self.dof_map
            .iter()
            .zip(&self.prescribed)
            .map(|(eq, &fixed)| eq.map_or(fixed, |e| free[e]))
            .collect()
    }

    /// `||K u - f|| / ||f||` for a full displacement vector `u`.
    pub fn relative_residual(&self, full: &[f64]) -> f64 {
        let free: Vec<f64> = self
            .dof_map
            .iter()
            .zip(full)
            .filter_map(|(eq, &u)| eq.map(|_| u))
            .collect();
        let ku = self.stiffness.mul_vec(&free);
        let num: f64 = ku
            .iter()
            .zip(&self.load)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let den: f64 = self.load.iter().map(|b| b * b).sum::<f64>().sqrt();
        num / den
    }
}

/// Accumulates element contributions directly into the free-equation system.
///
/// Couplings to prescribed dofs are moved to the right-hand side as they
/// are encountered, so the constrained rows are never stored.
pub(crate) struct Assembler {
    dof_map: Vec<Option<usize>>,
    prescribed: Vec<f64>,
    stiffness: BandedSpd,
    load: Vec<f64>,
}

impl Assembler {
    /// `constraints[d]` is `Some(value)` for a prescribed dof. `dof_bandwidth`
    /// bounds the global dof distance inside any element.
    pub(crate) fn new(constraints: &[Option<f64>], dof_bandwidth: usize) -> Self {
        let mut next = 0;
        let dof_map: Vec<Option<usize>> = constraints
            .iter()
            .map(|c| {
                if c.is_some() {
                    None
                } else {
                    next += 1;
                    Some(next - 1)
                }
            })
            .collect();
        let prescribed = constraints.iter().map(|c| c.unwrap_or(0.0)).collect();
        Self {
            dof_map,
            prescribed,
            stiffness: BandedSpd::zeros(next, dof_bandwidth),
            load: vec![0.0; next],
        }
    }

    /// Adds `scale * ke` where `ke` is row-major over `dofs`.
    pub(crate) fn add_element(&mut self, dofs: &[usize], ke: &[f64], scale: f64) {
        let n = dofs.len();
        debug_assert_eq!(ke.len(), n * n);
        for a in 0..n {
            let Some(ea) = self.dof_map[dofs[a]] else {
                continue;
            };
            for b in 0..n {
                let k = scale * ke[a * n + b];
                match self.dof_map[dofs[b]] {
                    Some(eb) if eb <= ea => self.stiffness.add(ea, eb, k),
                    Some(_) => {}
                    None => self.load[ea] -= k * self.prescribed[dofs[b]],
                }
            }
        }
    }

    pub(crate) fn add_load(&mut self, dof: usize, value: f64) {
        if let Some(e) = self.dof_map[dof] {
            self.load[e] += value;
        }
    }

    pub(crate) fn finish(self) -> AssembledSystem {
        AssembledSystem {
            stiffness: self.stiffness,
            load: self.load,
            dof_map: self.dof_map,
            prescribed: self.prescribed,
        }
    }
}
