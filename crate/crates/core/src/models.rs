//! Models (quantity of interest, limit state, cost) and the benchmark families.

use std::fmt;
use std::sync::Arc;

use cvis_fem::{
    assemble_mindlin, assemble_plane_stress, mindlin::center_node, young_modulus, KlBasis,
    MindlinProperties, PointLoad, StructuredMesh,
};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::densities::{Density, SampleSet};
use crate::rng::RngStream;
use crate::stats::{normal_cdf, normal_sf};
use crate::{CvisError, Result};

/// A deterministic scalar map of the input vector.
pub trait Response: Send + Sync {
    fn dim(&self) -> usize;
    fn eval(&self, z: &[f64]) -> Result<f64>;
}

/// What [`Model::value`] returns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Output {
    /// The failure indicator `[g(z) < 0]`.
    Indicator,
    /// The raw quantity of interest.
    Qoi,
}

/// Quantity of interest with limit state `g = threshold - qoi` and a cost.
#[derive(Clone)]
pub struct Model {
    name: String,
    response: Arc<dyn Response>,
    threshold: f64,
    cost: f64,
    output: Output,
}

impl fmt::Debug for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Model")
            .field("name", &self.name)
            .field("dim", &self.response.dim())
            .field("threshold", &self.threshold)
            .field("cost", &self.cost)
            .field("output", &self.output)
            .finish()
    }
}

impl Model {
    pub fn new(name: impl Into<String>, response: Arc<dyn Response>, threshold: f64, cost: f64, output: Output) -> Self {
        Self {
            name: name.into(),
            response,
            threshold,
            cost,
            output,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.response.dim()
    }

    pub fn cost(&self) -> f64 {
        self.cost
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn output(&self) -> Output {
        self.output
    }

    pub fn response(&self) -> &Arc<dyn Response> {
        &self.response
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }

    pub fn with_cost(mut self, cost: f64) -> Self {
        self.cost = cost;
        self
    }

    pub fn with_output(mut self, output: Output) -> Self {
        self.output = output;
        self
    }

    pub fn qoi(&self, z: &[f64]) -> Result<f64> {
        if z.len() != self.dim() {
            return Err(CvisError::DimensionMismatch {
                expected: self.dim(),
                got: z.len(),
            });
        }
        self.response.eval(z)
    }

    pub fn limit_state(&self, z: &[f64]) -> Result<f64> {
        Ok(self.threshold - self.qoi(z)?)
    }

    pub fn indicator(&self, z: &[f64]) -> Result<f64> {
        Ok(if self.limit_state(z)? < 0.0 { 1.0 } else { 0.0 })
    }

    pub fn value(&self, z: &[f64]) -> Result<f64> {
        match self.output {
            Output::Indicator => self.indicator(z),
            Output::Qoi => self.qoi(z),
        }
    }

    /// `value` at every sample, evaluated in parallel, returned in order.
    pub fn values(&self, samples: &SampleSet) -> Result<Vec<f64>> {
        (0..samples.len())
            .into_par_iter()
            .map(|i| self.value(samples.point(i)))
            .collect()
    }

    /// Raw quantity of interest at every sample, in order.
    pub fn qois(&self, samples: &SampleSet) -> Result<Vec<f64>> {
        (0..samples.len())
            .into_par_iter()
            .map(|i| self.qoi(samples.point(i)))
            .collect()
    }
}

/// High- and low-fidelity models over a shared input density.
#[derive(Debug, Clone)]
pub struct ModelPair {
    pub name: String,
    pub hf: Model,
    pub lf: Model,
    pub input: Density,
    /// Exact `E_p[value]` of each model when known.
    pub exact_means: Option<[f64; 2]>,
}

impl ModelPair {
    pub fn cost_ratio(&self) -> f64 {
        self.hf.cost() / self.lf.cost()
    }

    pub fn with_thresholds(mut self, hf: f64, lf: f64) -> Self {
        self.hf = self.hf.with_threshold(hf);
        self.lf = self.lf.with_threshold(lf);
        self.exact_means = None;
        self
    }

    pub fn with_cost_ratio(mut self, ratio: f64) -> Self {
        self.hf = self.hf.with_cost(ratio * self.lf.cost());
        self
    }
}

/// `offset + coeffs . z`.
#[derive(Debug, Clone)]
pub struct LinearResponse {
    pub coeffs: Vec<f64>,
    pub offset: f64,
}

impl Response for LinearResponse {
    fn dim(&self) -> usize {
        self.coeffs.len()
    }

    fn eval(&self, z: &[f64]) -> Result<f64> {
        Ok(self.offset + self.coeffs.iter().zip(z).map(|(a, b)| a * b).sum::<f64>())
    }
}

/// Indicator model with `g(z) = l - z` in one dimension.
pub fn threshold_model(name: &str, l: f64, cost: f64) -> Model {
    let response = Arc::new(LinearResponse {
        coeffs: vec![1.0],
        offset: 0.0,
    });
    Model::new(name, response, l, cost, Output::Indicator)
}

/// One-dimensional pair `g_i(z) = l_i - z`, `z ~ N(0, 1)`.
pub fn analytic_pair(l0: f64, l1: f64, cost_ratio: f64) -> ModelPair {
    ModelPair {
        name: "analytic".into(),
        hf: threshold_model("hf", l0, cost_ratio),
        lf: threshold_model("lf", l1, 1.0),
        input: Density::standard_normal(1),
        exact_means: Some([normal_sf(l0), normal_sf(l1)]),
    }
}

/// Model whose failure set defines an intermediate biasing density.
pub fn intermediate_threshold_model(l: f64) -> Model {
    threshold_model("intermediate", l, 1.0)
}

/// `N(0, 1)` conditioned on `z > l`, sampled exactly by rejection.
pub fn intermediate_threshold_density(l: f64) -> Result<Density> {
    Density::conditional(Density::standard_normal(1), intermediate_threshold_model(l), normal_sf(l))
}

/// Linear-Gaussian models `Y_i = mu_i + A_i z` with prescribed covariance.
#[derive(Debug, Clone)]
pub struct SyntheticFamily {
    /// `models[0]` is the high-fidelity model.
    pub models: Vec<Model>,
    /// Exact covariance of `(Y_0, ..., Y_M)`.
    pub covariance: DMatrix<f64>,
    pub means: DVector<f64>,
    pub input: Density,
}

/// Family with `corr(Y_0, Y_i) = correlations[i-1]`.
///
/// Low-fidelity models are conditionally independent given `Y_0`, so
/// `corr(Y_i, Y_j) = rho_i rho_j`, which is always a valid correlation.
pub fn synthetic_gaussian_family(correlations: &[f64], variances: &[f64], means: &[f64]) -> Result<SyntheticFamily> {
    let m = correlations.len();
    if variances.len() != m + 1 || means.len() != m + 1 {
        return Err(CvisError::LengthMismatch(format!(
            "{m} correlations need {} variances and means, got {} and {}",
            m + 1,
            variances.len(),
            means.len()
        )));
    }
    if let Some(v) = variances.iter().find(|v| !(**v >= 0.0)) {
        return Err(CvisError::InvalidInput(format!("variance {v} is negative")));
    }
    let rho = |i: usize| if i == 0 { 1.0 } else { correlations[i - 1] };
    let cov = DMatrix::from_fn(m + 1, m + 1, |i, j| {
        let r = if i == j {
            1.0
        } else if i == 0 || j == 0 {
            rho(i.max(j))
        } else {
            rho(i) * rho(j)
        };
        r * (variances[i] * variances[j]).sqrt()
    });
    synthetic_from_covariance(cov, DVector::from_column_slice(means))
}

/// Family realising an arbitrary positive-semidefinite covariance.
pub fn synthetic_from_covariance(covariance: DMatrix<f64>, means: DVector<f64>) -> Result<SyntheticFamily> {
    let n = covariance.nrows();
    if covariance.ncols() != n || means.len() != n || n < 2 {
        return Err(CvisError::LengthMismatch(format!(
            "covariance {}x{} with {} means",
            covariance.nrows(),
            covariance.ncols(),
            means.len()
        )));
    }
    let scale = covariance.amax().max(f64::MIN_POSITIVE);
    if (&covariance - covariance.transpose()).amax() > 1e-12 * scale {
        return Err(CvisError::NotPositiveDefinite("target covariance is not symmetric".into()));
    }
    // Symmetric square root; unlike Cholesky it also handles singular targets.
    let eig = SymmetricEigen::new(covariance.clone());
    if eig.eigenvalues.min() < -1e-10 * scale {
        return Err(CvisError::NotPositiveDefinite(format!(
            "target covariance has eigenvalue {}",
            eig.eigenvalues.min()
        )));
    }
    let sqrt_l = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0).sqrt()));
    let root = &eig.eigenvectors * sqrt_l * eig.eigenvectors.transpose();
    let models = (0..n)
        .map(|i| {
            let response = Arc::new(LinearResponse {
                coeffs: root.row(i).iter().copied().collect(),
                offset: means[i],
            });
            let name = if i == 0 { "hf".to_string() } else { format!("lf{i}") };
            Model::new(name, response, f64::INFINITY, 1.0, Output::Qoi)
        })
        .collect();
    Ok(SyntheticFamily {
        models,
        covariance,
        means,
        input: Density::standard_normal(n),
    })
}

impl SyntheticFamily {
    pub fn n_low_fidelity(&self) -> usize {
        self.models.len() - 1
    }
}

/// Cantilever beam with a Karhunen-Loeve Young's modulus field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BeamConfig {
    pub hf_mesh: (usize, usize),
    pub lf_mesh: (usize, usize),
    pub dims: (f64, f64),
    pub corr_lengths: (f64, f64),
    pub n_quad: usize,
    pub n_per_direction: usize,
    pub n_kl: usize,
    pub modulus_bounds: (f64, f64),
    pub nu: f64,
    /// Downward point load at the upper-right corner.
    pub load: f64,
    /// Where the low-fidelity model reads its single modulus.
    pub lf_point: (f64, f64),
    pub cost_ratio: f64,
}

impl Default for BeamConfig {
    fn default() -> Self {
        Self {
            hf_mesh: (60, 20),
            lf_mesh: (30, 10),
            dims: (0.6, 0.2),
            corr_lengths: (60.0, 20.0),
            n_quad: 128,
            n_per_direction: 5,
            n_kl: 10,
            modulus_bounds: (1.0, 2.0),
            nu: 0.3,
            load: 1.0,
            lf_point: (0.3, 0.1),
            cost_ratio: 11.0,
        }
    }
}

/// Elementwise moduli from the KL field at centroids, plane-stress solve,
/// downward tip displacement.
pub struct BeamHf {
    mesh: StructuredMesh,
    /// `modes[e * n_kl + k] = sqrt(lambda_k) psi_k(centroid_e)`.
    modes: Vec<f64>,
    n_kl: usize,
    bounds: (f64, f64),
    nu: f64,
    tip: usize,
    load: f64,
}

impl BeamHf {
    /// Young's modulus of every element for the input `xi`.
    pub fn element_moduli(&self, xi: &[f64]) -> Vec<f64> {
        self.modes
            .chunks_exact(self.n_kl)
            .map(|m| {
                let y: f64 = m.iter().zip(xi).map(|(a, b)| a * b).sum();
                young_modulus(y, self.bounds.0, self.bounds.1)
            })
            .collect()
    }
}

impl Response for BeamHf {
    fn dim(&self) -> usize {
        self.n_kl
    }

    fn eval(&self, xi: &[f64]) -> Result<f64> {
        let e = self.element_moduli(xi);
        let load = PointLoad {
            node: self.tip,
            fx: 0.0,
            fy: -self.load,
        };
        let u = assemble_plane_stress(&self.mesh, &e, self.nu, 1.0, &[load])?.solve()?;
        Ok(-u[2 * self.tip + 1])
    }
}

/// Coarse mesh with one modulus read from the field at a single point.
///
/// A uniform modulus scales the displacement by `1/E`, so the coarse
/// system is solved once for `E = 1` and rescaled per sample.
pub struct BeamLf {
    modes: Vec<f64>,
    bounds: (f64, f64),
    unit_tip: f64,
}

impl BeamLf {
    pub fn modulus(&self, xi: &[f64]) -> f64 {
        let y: f64 = self.modes.iter().zip(xi).map(|(a, b)| a * b).sum();
        young_modulus(y, self.bounds.0, self.bounds.1)
    }
}

impl Response for BeamLf {
    fn dim(&self) -> usize {
        self.modes.len()
    }

    fn eval(&self, xi: &[f64]) -> Result<f64> {
        Ok(self.unit_tip / self.modulus(xi))
    }
}

/// Builds both beam responses.
pub fn beam_responses(cfg: &BeamConfig) -> Result<(Arc<BeamHf>, Arc<BeamLf>)> {
    let basis = KlBasis::new(cfg.corr_lengths, cfg.dims, cfg.n_quad, cfg.n_per_direction, cfg.n_kl)?;
    let hf_mesh = StructuredMesh::new(cfg.hf_mesh.0, cfg.hf_mesh.1, cfg.dims.0, cfg.dims.1)?;
    let mut modes = Vec::with_capacity(hf_mesh.n_elements() * cfg.n_kl);
    for e in 0..hf_mesh.n_elements() {
        modes.extend(basis.scaled_modes_at(hf_mesh.centroid(e))?);
    }
    let tip = hf_mesh.node_id(hf_mesh.nx, hf_mesh.ny);
    let hf = BeamHf {
        mesh: hf_mesh,
        modes,
        n_kl: cfg.n_kl,
        bounds: cfg.modulus_bounds,
        nu: cfg.nu,
        tip,
        load: cfg.load,
    };

    let lf_mesh = StructuredMesh::new(cfg.lf_mesh.0, cfg.lf_mesh.1, cfg.dims.0, cfg.dims.1)?;
    let lf_tip = lf_mesh.node_id(lf_mesh.nx, lf_mesh.ny);
    let load = PointLoad {
        node: lf_tip,
        fx: 0.0,
        fy: -cfg.load,
    };
    let ones = vec![1.0; lf_mesh.n_elements()];
    let u = assemble_plane_stress(&lf_mesh, &ones, cfg.nu, 1.0, &[load])?.solve()?;
    let lf = BeamLf {
        modes: basis.scaled_modes_at([cfg.lf_point.0, cfg.lf_point.1])?,
        bounds: cfg.modulus_bounds,
        unit_tip: -u[2 * lf_tip + 1],
    };
    Ok((Arc::new(hf), Arc::new(lf)))
}

/// Beam pair with thresholds `(l0, l1)`; use `f64::INFINITY` before calibration.
pub fn beam_pair(cfg: &BeamConfig, thresholds: (f64, f64)) -> Result<ModelPair> {
    let (hf, lf) = beam_responses(cfg)?;
    Ok(ModelPair {
        name: "beam".into(),
        hf: Model::new("hf", hf, thresholds.0, cfg.cost_ratio, Output::Indicator),
        lf: Model::new("lf", lf, thresholds.1, 1.0, Output::Indicator),
        input: Density::standard_normal(cfg.n_kl),
        exact_means: None,
    })
}

/// Clamped square plate with four quadrant thicknesses and loads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlateConfig {
    pub hf_mesh: usize,
    pub lf_mesh: usize,
    pub side: f64,
    pub e: f64,
    pub nu: f64,
    pub kappa: f64,
    pub thickness_bounds: (f64, f64),
    pub load_bounds: (f64, f64),
    pub cost_ratio: f64,
}

impl Default for PlateConfig {
    fn default() -> Self {
        Self {
            hf_mesh: 30,
            lf_mesh: 10,
            side: 1.0,
            e: 1.0e4,
            nu: 0.3,
            kappa: 5.0 / 6.0,
            thickness_bounds: (0.05, 0.1),
            load_bounds: (1.0, 2.0),
            cost_ratio: 37.0,
        }
    }
}

/// Centre deflection of the plate.
///
/// Inputs are eight standard normals mapped through `Phi` onto the uniform
/// thickness and load ranges, so that the biasing densities live in an
/// unbounded space.
pub struct PlateResponse {
    mesh: StructuredMesh,
    props: MindlinProperties,
    center: usize,
    thickness_bounds: (f64, f64),
    load_bounds: (f64, f64),
}

impl PlateResponse {
    pub fn new(cfg: &PlateConfig, n: usize) -> Result<Self> {
        let mesh = StructuredMesh::new(n, n, cfg.side, cfg.side)?;
        let center = center_node(&mesh)?;
        Ok(Self {
            mesh,
            props: MindlinProperties {
                e: cfg.e,
                nu: cfg.nu,
                kappa: cfg.kappa,
            },
            center,
            thickness_bounds: cfg.thickness_bounds,
            load_bounds: cfg.load_bounds,
        })
    }

    /// Maps standard-normal inputs to `(thicknesses, loads)`.
    pub fn physical_inputs(&self, z: &[f64]) -> ([f64; 4], [f64; 4]) {
        let (h0, h1) = self.thickness_bounds;
        let (s0, s1) = self.load_bounds;
        let mut h = [0.0; 4];
        let mut s = [0.0; 4];
        for i in 0..4 {
            h[i] = h0 + (h1 - h0) * normal_cdf(z[i]);
            s[i] = s0 + (s1 - s0) * normal_cdf(z[4 + i]);
        }
        (h, s)
    }

    pub fn deflection(&self, h: &[f64; 4], s: &[f64; 4]) -> Result<f64> {
        let u = assemble_mindlin(&self.mesh, h, s, &self.props)?.solve()?;
        Ok(u[3 * self.center])
    }
}

impl Response for PlateResponse {
    fn dim(&self) -> usize {
        8
    }

    fn eval(&self, z: &[f64]) -> Result<f64> {
        let (h, s) = self.physical_inputs(z);
        self.deflection(&h, &s)
    }
}

/// Plate pair with thresholds `(l0, l1)`.
pub fn plate_pair(cfg: &PlateConfig, thresholds: (f64, f64)) -> Result<ModelPair> {
    let hf = Arc::new(PlateResponse::new(cfg, cfg.hf_mesh)?);
    let lf = Arc::new(PlateResponse::new(cfg, cfg.lf_mesh)?);
    Ok(ModelPair {
        name: "plate".into(),
        hf: Model::new("hf", hf, thresholds.0, cfg.cost_ratio, Output::Indicator),
        lf: Model::new("lf", lf, thresholds.1, 1.0, Output::Indicator),
        input: Density::standard_normal(8),
        exact_means: None,
    })
}

/// Threshold chosen so that a target fraction of reference samples fails.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub threshold: f64,
    pub achieved_pf: f64,
    pub n_ref: usize,
}

/// Empirical `(1 - target_pf)` quantile of the QoI under `p`.
///
/// The threshold sits midway between the order statistics on either side
/// of the cut, so exactly `round(target_pf * n_ref)` reference samples fail.
pub fn calibrate_thresholds(
    model: &Model,
    p: &Density,
    target_pf: f64,
    n_ref: usize,
    rng: &mut RngStream,
) -> Result<Calibration> {
    if !(target_pf > 0.0 && target_pf <= 0.5) {
        return Err(CvisError::InvalidInput(format!(
            "target failure probability must lie in (0, 0.5], got {target_pf}"
        )));
    }
    if (n_ref as f64) * target_pf < 100.0 {
        return Err(CvisError::InsufficientTailMass {
            n_ref,
            target: target_pf,
        });
    }
    let z = p.sample(rng, n_ref)?;
    let mut q = model.qois(&z)?;
    q.sort_by(f64::total_cmp);
    let tail = (target_pf * n_ref as f64).round() as usize;
    let cut = n_ref - tail;
    let threshold = 0.5 * (q[cut - 1] + q[cut]);
    let failures = q.iter().filter(|&&v| v > threshold).count();
    Ok(Calibration {
        threshold,
        achieved_pf: failures as f64 / n_ref as f64,
        n_ref,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_metadata() {
        let pair = analytic_pair(3.0, 2.8, 30.0);
        let [p0, p1] = pair.exact_means.unwrap();
        assert!((p0 - 1.349_898e-3).abs() < 1e-9);
        assert!((p1 - 2.555_130e-3).abs() < 1e-9);
        assert_eq!(pair.cost_ratio(), 30.0);
        assert_eq!(pair.hf.indicator(&[3.1]).unwrap(), 1.0);
        assert_eq!(pair.hf.indicator(&[3.0]).unwrap(), 0.0);
    }

    #[test]
    fn non_psd_target_is_rejected() {
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(synthetic_from_covariance(cov, DVector::zeros(2)).is_err());
    }
}
