//! Null and alternative models and the matrices that define each test
//! statistic.
//!
//! Every statistic is a ratio of two quadratic forms in the data,
//! `(y' M0 y - y' M1 y) / y' M1 y`. The matrices are always stored
//! pre-centered: with `R0 = I - 1 w'` the (weighted) mean-removal operator,
//! the stored matrices are `R0' M R0`, and the data are centered with the
//! same weights before the forms are evaluated. Both quadratic forms are
//! therefore unaffected by an additive constant in `y`.
//!
//! Under the null hypothesis `y = c 1 + e` with `e ~ N(0, s^2 V)`. For
//! white noise `V = I`; with measurement accuracies `V = diag(s_j^2)`; for
//! red noise `V = C_rho`. The null distribution of the statistic uses the
//! sandwiched matrices `V^(1/2) M V^(1/2)`, while the observed statistic is
//! computed from the unsandwiched ones since the data already carry `V`.
//! Hyperparameters fitted under the alternative are plugged into `V`.

mod gpr;
mod sinusoid;

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::covariance::KernelParams;
use crate::error::{bail, Result};
use crate::lightcurve::LightCurve;
use crate::Matrix;

pub use gpr::{fit_gpr, gpr_smoother, gpr_test_matrices, loo_matrices, residual_matrix, GprMatrices};
pub use sinusoid::sinusoid_m1;

/// Model family of the alternative hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// The constant-mean null model; not a valid alternative.
    ConstantNull,
    SinusoidLs,
    SinusoidWls,
    Gpr,
    GprWeighted,
    GprRed,
}

impl Family {
    pub fn is_gpr(self) -> bool {
        matches!(self, Family::Gpr | Family::GprWeighted | Family::GprRed)
    }

    pub fn is_weighted(self) -> bool {
        matches!(self, Family::SinusoidWls | Family::GprWeighted)
    }

    pub fn noise_model(self) -> NoiseModel {
        if self == Family::GprRed {
            NoiseModel::Red
        } else {
            NoiseModel::White
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    /// Generalized F: compares residual sums of squares.
    F,
    /// Compares leave-one-out cross-validation errors.
    Cvf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    #[default]
    MarginalLikelihood,
    LooCve,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseModel {
    White,
    Red,
}

/// Hyperparameter search settings for the Gaussian process families.
///
/// The search runs in `(log tau, log h[, rho])` with `tau = A / sigma^2`;
/// `sigma^2` itself is profiled out. Bounds are enforced with a logistic map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub starts: usize,
    pub max_evals: usize,
    pub tol: f64,
    pub log_tau_bounds: (f64, f64),
    pub log_h_bounds: (f64, f64),
    pub rho_max: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self { starts: 5, max_evals: 300, tol: 1e-7, log_tau_bounds: (-12.0, 12.0), log_h_bounds: (-1.5, 3.0), rho_max: 0.99 }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.starts == 0 || self.max_evals == 0 {
            bail!(Validation, "fit needs at least one start and one evaluation");
        }
        let ok = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && lo < hi;
        if !ok(self.log_tau_bounds) || !ok(self.log_h_bounds) {
            bail!(Validation, "fit bounds must be finite with lo < hi");
        }
        if !(self.rho_max > 0.0 && self.rho_max < 1.0) {
            bail!(Validation, "rho_max must lie in (0, 1), got {}", self.rho_max);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub hyperparams: KernelParams,
    /// Log marginal likelihood (maximized) or LOO-CVE (minimized).
    pub objective: f64,
    pub converged: bool,
    /// Objective evaluations over all starts.
    pub iterations: usize,
}

/// What to test at each trial period.
///
/// `hyperparams`, when set, skips fitting for the Gaussian process families;
/// its `period` field is ignored and replaced by the trial period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: Family,
    pub statistic: Statistic,
    #[serde(default)]
    pub objective: Objective,
    #[serde(default)]
    pub fit: FitConfig,
    #[serde(default)]
    pub hyperparams: Option<KernelParams>,
}

impl ModelSpec {
    pub fn new(family: Family, statistic: Statistic) -> Self {
        Self { family, statistic, objective: Objective::default(), fit: FitConfig::default(), hyperparams: None }
    }

    pub fn with_objective(mut self, objective: Objective) -> Self {
        self.objective = objective;
        self
    }

    pub fn with_fit(mut self, fit: FitConfig) -> Self {
        self.fit = fit;
        self
    }

    pub fn with_hyperparams(mut self, hyperparams: KernelParams) -> Self {
        self.hyperparams = Some(hyperparams);
        self
    }

    /// Checks the spec on its own and against the light curve it will be applied to.
    pub fn validate(&self, lc: &LightCurve) -> Result<()> {
        if self.family == Family::ConstantNull {
            bail!(Validation, "the constant model is the null hypothesis, not an alternative");
        }
        if self.statistic == Statistic::Cvf && !self.family.is_gpr() {
            bail!(Validation, "the CVF statistic needs a Gaussian process family");
        }
        if self.family.is_weighted() && lc.accuracies().is_none() {
            bail!(Validation, "{:?} needs measurement accuracies", self.family);
        }
        self.fit.validate()?;
        if let Some(p) = self.hyperparams {
            p.validate()?;
            if self.family == Family::GprRed && p.rho < 0.0 {
                bail!(Validation, "red-noise fits use rho in [0, 1), got {}", p.rho);
            }
        }
        Ok(())
    }
}

/// The matrix pair of one statistic at one trial period.
#[derive(Debug, Clone, PartialEq)]
pub struct TestMatrices {
    /// Null-model quadratic form, pre-centered.
    pub m0: Matrix,
    /// Alternative-model quadratic form, pre-centered.
    pub m1: Matrix,
    /// `V^(1/2) M0 V^(1/2)` when the null noise covariance is not a multiple of `I`.
    pub null_m0: Option<Matrix>,
    pub null_m1: Option<Matrix>,
    /// The null distribution is exactly `F(dof.0, dof.1)` after rescaling.
    pub exact_f_valid: bool,
    pub dof: Option<(usize, usize)>,
    /// Weights `w` of the centering `y - (w' y) 1`; they sum to one.
    pub center_weights: Vec<f64>,
}

impl TestMatrices {
    pub fn dim(&self) -> usize {
        self.m0.nrows()
    }

    pub fn center(&self, y: &[f64]) -> Vec<f64> {
        let mean: f64 = self.center_weights.iter().zip(y).map(|(w, y)| w * y).sum();
        y.iter().map(|v| v - mean).collect()
    }

    /// Matrices whose spectrum gives the null distribution.
    pub fn null_pair(&self) -> (&Matrix, &Matrix) {
        match (&self.null_m0, &self.null_m1) {
            (Some(a), Some(b)) => (a, b),
            _ => (&self.m0, &self.m1),
        }
    }
}

/// `I - 1 1' / n`.
pub fn centering_m0(n: usize) -> Result<Matrix> {
    if n < 2 {
        bail!(Domain, "centering needs n >= 2, got {n}");
    }
    let c = 1.0 / n as f64;
    Ok(Matrix::from_fn(n, n, |j, k| if j == k { 1.0 - c } else { -c }))
}

/// Fitted hyperparameters (if any) and one matrix pair per requested statistic.
#[derive(Debug, Clone)]
pub struct PreparedModel {
    pub fit: Option<FitResult>,
    pub matrices: Vec<(Statistic, TestMatrices)>,
}

/// Fits the model at `period` (Gaussian process families) and builds the
/// matrices for each statistic in `stats`, sharing one factorization.
pub fn prepare(lc: &LightCurve, period: f64, spec: &ModelSpec, stats: &[Statistic]) -> Result<PreparedModel> {
    spec.validate(lc)?;
    if !(period.is_finite() && period > 0.0) {
        bail!(Domain, "trial period must be positive, got {period}");
    }
    if spec.family.is_gpr() {
        let fit = match spec.hyperparams {
            Some(p) => FitResult { hyperparams: KernelParams { period, ..p }, objective: f64::NAN, converged: true, iterations: 0 },
            None => fit_gpr(lc, period, spec.family, spec.objective, &spec.fit)?,
        };
        let gm = gpr_test_matrices(lc, &fit.hyperparams, spec.family, stats)?;
        let matrices = stats
            .iter()
            .map(|&s| {
                let m = match s {
                    Statistic::F => gm.f.clone(),
                    Statistic::Cvf => gm.cvf.clone(),
                };
                m.map(|m| (s, m))
            })
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| crate::Error::Numerical(alloc::string::String::from("requested statistic was not built")))?;
        Ok(PreparedModel { fit: Some(fit), matrices })
    } else {
        if stats.contains(&Statistic::Cvf) {
            bail!(Validation, "the CVF statistic needs a Gaussian process family");
        }
        let m = sinusoid_m1(lc.times(), period, lc.weights().as_deref().filter(|_| spec.family.is_weighted()))?;
        Ok(PreparedModel { fit: None, matrices: stats.iter().map(|&s| (s, m.clone())).collect() })
    }
}

/// Matrices of `spec.statistic` at `period`, given an already fitted model.
pub fn build_test_matrices(spec: &ModelSpec, fit: Option<&FitResult>, lc: &LightCurve, period: f64) -> Result<TestMatrices> {
    let mut spec = *spec;
    if let Some(f) = fit {
        spec.hyperparams = Some(f.hyperparams);
    }
    let mut prepared = prepare(lc, period, &spec, &[spec.statistic])?;
    Ok(prepared.matrices.remove(0).1)
}

/// `R0' M R0` with `R0 = I - 1 w'`, in `O(n^2)`.
pub(crate) fn precenter(m: &mut Matrix, w: &[f64]) {
    let n = m.nrows();
    let row_sums: Vec<f64> = (0..n).map(|j| m.row(j).sum()).collect();
    let total: f64 = row_sums.iter().sum();
    for k in 0..n {
        for j in 0..n {
            m[(j, k)] += -w[j] * row_sums[k] - row_sums[j] * w[k] + total * w[j] * w[k];
        }
    }
}

/// Scales rows and columns: `diag(d) M diag(d)`.
pub(crate) fn sandwich_diag(m: &Matrix, d: &[f64]) -> Matrix {
    Matrix::from_fn(m.nrows(), m.ncols(), |j, k| d[j] * m[(j, k)] * d[k])
}
