//! Distribution of `X = sum_i lambda_i Z_i^2` with independent standard
//! normal `Z_i`.
//!
//! A p-value of a generalized F or CVF statistic is `P(X > 0)` where the
//! weights are the eigenvalues of `M0 - (1 + t_obs) M1`. Four evaluators
//! are provided: the saddlepoint approximation used by the pipeline, Imhof
//! numerical inversion, Monte Carlo, and the exact F distribution for the
//! projection case.

mod exact;
mod imhof;
mod mc;
mod saddlepoint;

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::covariance::{check_symmetric, sym_eigenvalues};
use crate::error::{bail, Result};
use crate::Matrix;

pub use exact::exact_f_survival;
pub use imhof::{imhof_survival, ImhofConfig};
pub use mc::{mc_survival, MIN_MC_REPS};
pub use saddlepoint::{saddlepoint_survival, SaddlepointMethod, SaddlepointSolution};

/// Eigenvalues below this fraction of the largest magnitude are dropped.
pub const EIGEN_CUTOFF: f64 = 1e-10;

/// Where a set of weights came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadFormSource {
    pub dim: usize,
    pub period: Option<f64>,
}

/// Weights of a linear combination of independent chi-square(1) variables.
///
/// An empty weight vector is the point mass at zero, which arises when the
/// reduced matrix vanishes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadFormSpec {
    pub lambdas: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<QuadFormSource>,
}

impl QuadFormSpec {
    pub fn new(lambdas: Vec<f64>) -> Result<Self> {
        if let Some(l) = lambdas.iter().find(|l| !l.is_finite()) {
            bail!(Domain, "non-finite weight {l}");
        }
        let lambdas: Vec<f64> = lambdas.into_iter().filter(|&l| l != 0.0).collect();
        Ok(Self { lambdas, source: None })
    }

    pub fn mean(&self) -> f64 {
        self.lambdas.iter().sum()
    }

    pub fn abs_sum(&self) -> f64 {
        self.lambdas.iter().map(|l| l.abs()).sum()
    }

    pub fn variance(&self) -> f64 {
        2.0 * self.lambdas.iter().map(|l| l * l).sum::<f64>()
    }

    /// Smallest negative and largest positive weight.
    pub fn extremes(&self) -> (Option<f64>, Option<f64>) {
        let neg = self.lambdas.iter().copied().filter(|&l| l < 0.0).fold(None, |m: Option<f64>, l| Some(m.map_or(l, |m| m.min(l))));
        let pos = self.lambdas.iter().copied().filter(|&l| l > 0.0).fold(None, |m: Option<f64>, l| Some(m.map_or(l, |m| m.max(l))));
        (neg, pos)
    }

    /// Open interval of `s` on which the CGF exists.
    pub fn cgf_domain(&self) -> (f64, f64) {
        let (neg, pos) = self.extremes();
        (neg.map_or(f64::NEG_INFINITY, |l| 0.5 / l), pos.map_or(f64::INFINITY, |l| 0.5 / l))
    }

    /// Multiply every weight by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self { lambdas: self.lambdas.iter().map(|l| l * c).collect(), source: self.source }
    }

    /// Survival at `x` when the distribution is the point mass at zero.
    pub(crate) fn degenerate_survival(x: f64) -> f64 {
        if x < 0.0 {
            1.0
        } else {
            0.0
        }
    }
}

/// Eigenvalue weights of `M0 - (1 + t_obs) M1`, i.e. `A - t_obs B` with
/// `A = M0 - M1` and `B = M1`.
pub fn reduce_to_lambdas(m0: &Matrix, m1: &Matrix, t_obs: f64) -> Result<QuadFormSpec> {
    if m0.shape() != m1.shape() {
        bail!(Validation, "M0 is {:?} but M1 is {:?}", m0.shape(), m1.shape());
    }
    if !t_obs.is_finite() {
        bail!(Domain, "observed statistic must be finite, got {t_obs}");
    }
    check_symmetric(m0, 1e-9)?;
    check_symmetric(m1, 1e-9)?;
    let mut a = m1 * (-(1.0 + t_obs));
    a += m0;
    let eig = sym_eigenvalues(&a);
    if eig.iter().any(|l| !l.is_finite()) {
        bail!(Numerical, "eigensolver returned non-finite eigenvalues");
    }
    Ok(QuadFormSpec { lambdas: drop_negligible(eig), source: Some(QuadFormSource { dim: m0.nrows(), period: None }) })
}

pub(crate) fn drop_negligible(eig: Vec<f64>) -> Vec<f64> {
    let max = eig.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    let cut = EIGEN_CUTOFF * max;
    eig.into_iter().filter(|l| l.abs() > cut).collect()
}

/// Cumulant generating function and its first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cgf {
    pub k: f64,
    pub k1: f64,
    pub k2: f64,
}

/// `K(s) = -1/2 sum log(1 - 2 s lambda_i)` with
/// `K'(s) = sum lambda_i / (1 - 2 s lambda_i)` and
/// `K''(s) = sum 2 lambda_i^2 / (1 - 2 s lambda_i)^2`.
pub fn cgf(spec: &QuadFormSpec, s: f64) -> Result<Cgf> {
    let (lo, hi) = spec.cgf_domain();
    if !(s > lo && s < hi) {
        bail!(Domain, "s = {s} outside the CGF domain ({lo}, {hi})");
    }
    Ok(cgf_unchecked(&spec.lambdas, s))
}

pub(crate) fn cgf_unchecked(lambdas: &[f64], s: f64) -> Cgf {
    let mut k = 0.0;
    let mut k1 = 0.0;
    let mut k2 = 0.0;
    for &l in lambdas {
        let d = 1.0 - 2.0 * s * l;
        k -= 0.5 * libm::log1p(-2.0 * s * l);
        let r = l / d;
        k1 += r;
        k2 += 2.0 * r * r;
    }
    Cgf { k, k1, k2 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn cgf_at_origin() {
        let spec = QuadFormSpec::new(vec![1.5, -0.3, 0.7]).unwrap();
        let c = cgf(&spec, 0.0).unwrap();
        assert_eq!(c.k, 0.0);
        assert!((c.k1 - 1.9).abs() < 1e-15);
        assert!((c.k2 - 2.0 * (2.25 + 0.09 + 0.49)).abs() < 1e-14);
    }

    #[test]
    fn cgf_single_chi_square() {
        let spec = QuadFormSpec::new(vec![1.0]).unwrap();
        for &s in &[-3.0, -0.2, 0.1, 0.45] {
            let c = cgf(&spec, s).unwrap();
            assert!((c.k + 0.5 * (1.0 - 2.0 * s).ln()).abs() < 1e-14);
        }
        assert!(cgf(&spec, 0.5).is_err());
        assert!(cgf(&spec, 0.7).is_err());
    }

    #[test]
    fn cgf_mixed_signs() {
        let spec = QuadFormSpec::new(vec![1.0, -1.0]).unwrap();
        let c = cgf(&spec, 0.25).unwrap();
        assert!((c.k1 - (1.0 / 0.5 - 1.0 / 1.5)).abs() < 1e-15);
        assert!((c.k1 - 4.0 / 3.0).abs() < 1e-14);
        assert_eq!(spec.cgf_domain(), (-0.5, 0.5));
    }

    #[test]
    fn cgf_second_derivative_matches_finite_difference() {
        let spec = QuadFormSpec::new(vec![2.0, 0.4, -1.1, -0.05]).unwrap();
        let s = 0.13;
        let h = 1e-5;
        let c = cgf(&spec, s).unwrap();
        let fd1 = (cgf(&spec, s + h).unwrap().k - cgf(&spec, s - h).unwrap().k) / (2.0 * h);
        let fd2 = (cgf(&spec, s + h).unwrap().k1 - cgf(&spec, s - h).unwrap().k1) / (2.0 * h);
        assert!((fd1 - c.k1).abs() < 1e-7 * c.k1.abs().max(1.0));
        assert!((fd2 - c.k2).abs() < 1e-6 * c.k2);
    }

    #[test]
    fn reduce_equal_matrices_gives_nonpositive_weights() {
        let m = Matrix::from_row_slice(3, 3, &[2.0, 0.3, 0.0, 0.3, 1.0, 0.1, 0.0, 0.1, 1.5]);
        let spec = reduce_to_lambdas(&m, &m, 0.8).unwrap();
        assert!(spec.lambdas.iter().all(|&l| l < 0.0));
        assert_eq!(crate::quadform::saddlepoint_survival(&spec, 0.0).unwrap().survival, 0.0);
    }

    #[test]
    fn reduce_preserves_trace() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut a = Matrix::from_fn(5, 5, |_, _| rng.random::<f64>() - 0.5);
        a = &a + a.transpose();
        let zero = Matrix::zeros(5, 5);
        let spec = reduce_to_lambdas(&a, &zero, 0.0).unwrap();
        assert!((spec.mean() - a.trace()).abs() < 1e-10);
    }
}
