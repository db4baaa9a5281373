//! Covariance and correlation matrices: the periodic kernel, red-noise
//! correlation, and the factorizations built on them.

use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::linalg::{Cholesky, SymmetricEigen};
use nalgebra::Dyn;
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{bail, Error, Result};
use crate::Matrix;

/// Gaussian process hyperparameters.
///
/// `amplitude` A scales the periodic kernel, `period` p is its exact period,
/// `smoothness` h widens or sharpens it, `noise_variance` is the residual
/// variance and `rho` the red-noise correlation at unit time lag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub amplitude: f64,
    pub period: f64,
    pub smoothness: f64,
    pub noise_variance: f64,
    #[serde(default)]
    pub rho: f64,
}

impl KernelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude.is_finite() && self.amplitude >= 0.0) {
            bail!(Domain, "amplitude must be non-negative, got {}", self.amplitude);
        }
        if !(self.period.is_finite() && self.period > 0.0) {
            bail!(Domain, "period must be positive, got {}", self.period);
        }
        if !(self.smoothness.is_finite() && self.smoothness > 0.0) {
            bail!(Domain, "smoothness must be positive, got {}", self.smoothness);
        }
        if !(self.noise_variance.is_finite() && self.noise_variance > 0.0) {
            bail!(Domain, "noise variance must be positive, got {}", self.noise_variance);
        }
        if !(self.rho > -1.0 && self.rho < 1.0) {
            bail!(Domain, "rho must lie in (-1, 1), got {}", self.rho);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrKind {
    PeriodicKernel,
    RedNoise,
    Identity,
}

/// Dense symmetric matrix tagged with how it was built.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrMatrix {
    pub matrix: Matrix,
    pub kind: CorrKind,
}

impl CorrMatrix {
    pub fn identity(n: usize) -> Self {
        Self { matrix: Matrix::identity(n, n), kind: CorrKind::Identity }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// `1 - cos(2 pi (t_j - t_k) / p)` for every pair, i.e. `2 sin^2(pi (t_j - t_k) / p)`.
///
/// Depends only on the sampling and the period, so model fits reuse it for
/// every smoothness value they try.
#[derive(Debug, Clone)]
pub struct PhaseDistance {
    d: Matrix,
}

impl PhaseDistance {
    pub fn new(times: &[f64], period: f64) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            bail!(Domain, "period must be positive, got {period}");
        }
        let n = times.len();
        let t0 = times.first().copied().unwrap_or(0.0);
        let (s, c): (Vec<f64>, Vec<f64>) = times
            .iter()
            .map(|&t| {
                let x = (t - t0) / period;
                let arg = 2.0 * PI * (x - x.round());
                (arg.sin(), arg.cos())
            })
            .unzip();
        let mut d = Matrix::zeros(n, n);
        for k in 0..n {
            for j in k + 1..n {
                let v = (1.0 - (c[j] * c[k] + s[j] * s[k])).max(0.0);
                d[(j, k)] = v;
                d[(k, j)] = v;
            }
        }
        Ok(Self { d })
    }

    /// Unit-amplitude periodic correlation `exp(-(1 - cos(2 pi dt / p)) / h^2)`.
    pub fn correlation(&self, smoothness: f64) -> Matrix {
        let mut r = Matrix::zeros(self.d.nrows(), self.d.ncols());
        self.correlation_into(smoothness, &mut r);
        r
    }

    pub(crate) fn correlation_into(&self, smoothness: f64, out: &mut Matrix) {
        let n = self.d.nrows();
        let inv = 1.0 / (smoothness * smoothness);
        for k in 0..n {
            out[(k, k)] = 1.0;
            for j in k + 1..n {
                let v = (-self.d[(j, k)] * inv).exp();
                out[(j, k)] = v;
                out[(k, j)] = v;
            }
        }
    }
}

/// Absolute time lags `|t_j - t_k|`.
#[derive(Debug, Clone)]
pub struct TimeLags {
    lag: Matrix,
    integer_lags: bool,
}

impl TimeLags {
    pub fn new(times: &[f64]) -> Self {
        let n = times.len();
        let lag = Matrix::from_fn(n, n, |j, k| (times[j] - times[k]).abs());
        let integer_lags = lag.iter().all(|v| v.fract() == 0.0);
        Self { lag, integer_lags }
    }

    /// Red-noise correlation `rho^|t_j - t_k|`.
    pub fn correlation(&self, rho: f64) -> Result<Matrix> {
        let mut c = Matrix::zeros(self.lag.nrows(), self.lag.ncols());
        self.correlation_into(rho, &mut c)?;
        Ok(c)
    }

    pub(crate) fn correlation_into(&self, rho: f64, out: &mut Matrix) -> Result<()> {
        if !(rho > -1.0 && rho < 1.0) {
            bail!(Domain, "rho must lie in (-1, 1), got {rho}");
        }
        if rho < 0.0 && !self.integer_lags {
            bail!(Domain, "negative rho needs integer time lags; rho^dt is complex for fractional dt");
        }
        let n = self.lag.nrows();
        if rho == 0.0 {
            out.fill(0.0);
            out.fill_diagonal(1.0);
            return Ok(());
        }
        let ln_abs = rho.abs().ln();
        for k in 0..n {
            out[(k, k)] = 1.0;
            for j in k + 1..n {
                let dt = self.lag[(j, k)];
                let mut v = (dt * ln_abs).exp();
                if rho < 0.0 && (dt as i64) % 2 == 1 {
                    v = -v;
                }
                out[(j, k)] = v;
                out[(k, j)] = v;
            }
        }
        Ok(())
    }
}

/// Periodic kernel `K_jk = A exp(-2 sin^2(pi (t_j - t_k) / p) / h^2)`.
pub fn periodic_kernel(times: &[f64], amplitude: f64, period: f64, smoothness: f64) -> Result<CorrMatrix> {
    KernelParams { amplitude, period, smoothness, noise_variance: 1.0, rho: 0.0 }.validate()?;
    let mut matrix = PhaseDistance::new(times, period)?.correlation(smoothness);
    matrix *= amplitude;
    Ok(CorrMatrix { matrix, kind: CorrKind::PeriodicKernel })
}

/// Red-noise correlation `C_jk = rho^|t_j - t_k|`; `rho = 0` gives the identity.
pub fn red_noise_corr(times: &[f64], rho: f64) -> Result<CorrMatrix> {
    let matrix = TimeLags::new(times).correlation(rho)?;
    let kind = if rho == 0.0 { CorrKind::Identity } else { CorrKind::RedNoise };
    Ok(CorrMatrix { matrix, kind })
}

/// Lower Cholesky factor together with the diagonal jitter that was needed.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    pub l: Matrix,
    pub jitter: f64,
    chol: Cholesky<f64, Dyn>,
}

impl CholeskyFactor {
    pub fn solve(&self, b: &Matrix) -> Matrix {
        self.chol.solve(b)
    }

    pub fn solve_vec(&self, b: &[f64]) -> Vec<f64> {
        let v = nalgebra::DVector::from_column_slice(b);
        self.chol.solve(&v).as_slice().to_vec()
    }

    pub fn ln_det(&self) -> f64 {
        2.0 * self.l.diagonal().iter().map(|d| d.ln()).sum::<f64>()
    }
}

/// Jitter schedule relative to `trace / n`: first an exact attempt, then
/// `1e-10, 1e-9, ..., 1e-6`.
const JITTER_STEPS: [f64; 6] = [0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6];

/// Cholesky factorization with escalating diagonal jitter.
pub fn cholesky(m: &Matrix) -> Result<CholeskyFactor> {
    check_square(m)?;
    let n = m.nrows();
    let scale = if n == 0 { 0.0 } else { m.trace() / n as f64 };
    for &step in &JITTER_STEPS {
        let jitter = step * scale;
        if step > 0.0 && !(jitter > 0.0) {
            break;
        }
        let mut a = m.clone();
        for i in 0..n {
            a[(i, i)] += jitter;
        }
        if let Some(chol) = Cholesky::new(a) {
            let l = chol.l();
            return Ok(CholeskyFactor { l, jitter, chol });
        }
    }
    Err(Error::NotPositiveDefinite { min_eigenvalue: min_eigenvalue(m) })
}

/// Symmetric square root through the eigendecomposition, negative
/// eigenvalues clamped to zero.
pub fn sqrt_sym(m: &Matrix) -> Result<Matrix> {
    check_symmetric(m, 1e-12)?;
    let eig = SymmetricEigen::new(m.clone());
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        let r = lambda.max(0.0).sqrt();
        scaled.column_mut(k).scale_mut(r);
    }
    let mut s = scaled * v.transpose();
    symmetrize(&mut s);
    Ok(s)
}

/// Eigenvalues of a symmetric matrix, unsorted.
pub fn sym_eigenvalues(m: &Matrix) -> Vec<f64> {
    m.clone().symmetric_eigenvalues().as_slice().to_vec()
}

pub fn min_eigenvalue(m: &Matrix) -> f64 {
    sym_eigenvalues(m).into_iter().fold(f64::INFINITY, f64::min)
}

pub(crate) fn check_square(m: &Matrix) -> Result<()> {
    if m.nrows() != m.ncols() {
        bail!(Validation, "matrix is {}x{}, expected square", m.nrows(), m.ncols());
    }
    Ok(())
}

/// Symmetry within `rel_tol` of the largest absolute entry.
pub fn check_symmetric(m: &Matrix, rel_tol: f64) -> Result<()> {
    check_square(m)?;
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let n = m.nrows();
    for k in 0..n {
        for j in k + 1..n {
            let diff = (m[(j, k)] - m[(k, j)]).abs();
            if diff > rel_tol * scale {
                bail!(Validation, "matrix not symmetric at ({j}, {k}): |diff| = {diff:e}");
            }
        }
    }
    Ok(())
}

pub fn symmetrize(m: &mut Matrix) {
    let n = m.nrows();
    for k in 0..n {
        for j in k + 1..n {
            let v = 0.5 * (m[(j, k)] + m[(k, j)]);
            m[(j, k)] = v;
            m[(k, j)] = v;
        }
    }
}
