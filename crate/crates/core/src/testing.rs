//! Observed statistics, p-values and multiple-testing levels.

use alloc::vec::Vec;

use nalgebra::DVector;
use num_traits::Float;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{bail, Error, Result};
use crate::models::TestMatrices;
use crate::quadform::{exact_f_survival, imhof_survival, reduce_to_lambdas, saddlepoint_survival, MIN_MC_REPS};
use crate::simulate::rng_for;
use crate::Matrix;

/// How the null tail probability is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum Evaluator {
    /// Exact F when the matrices allow it, saddlepoint otherwise.
    #[default]
    Auto,
    Saddlepoint,
    Imhof,
    /// Simulates the statistic under the null with the fitted matrices.
    MonteCarlo { reps: usize, seed: u64 },
    ExactF,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PValueMethod {
    ExactF,
    Saddlepoint,
    Imhof,
    MonteCarlo,
    /// Degenerate input; the p-value follows from the flag.
    None,
}

/// Inputs for which the statistic is undefined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFlag {
    /// The data carry no variation around the null fit.
    ConstantData,
    /// The alternative reproduces the data exactly.
    PerfectFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub method: PValueMethod,
    /// `p_value < alpha` at the per-test level used.
    pub significant: bool,
    pub flag: Option<TestFlag>,
    /// P-values from additional evaluators, for comparison.
    pub cross_checks: Vec<(PValueMethod, f64)>,
}

/// Residual sum of squares of the null fit below this fraction of `|y|^2`
/// means the data are constant up to rounding.
const CONSTANT_RTOL: f64 = 1e-24;
/// Alternative-model residuals below this fraction of the null residuals
/// mean the fit interpolates the data.
const PERFECT_RTOL: f64 = 1e-20;
const TINY: f64 = 1e-300;

fn quad(y: &DVector<f64>, m: &Matrix) -> f64 {
    y.dot(&(m * y))
}

fn classify(rss0: f64, rss1: f64, y_sq: f64) -> Option<TestFlag> {
    if rss0 <= CONSTANT_RTOL * y_sq || rss0 <= TINY {
        Some(TestFlag::ConstantData)
    } else if rss1 <= PERFECT_RTOL * rss0 || rss1 <= TINY {
        Some(TestFlag::PerfectFit)
    } else {
        None
    }
}

fn ratio(rss0: f64, rss1: f64, y_sq: f64) -> Result<f64> {
    match classify(rss0, rss1, y_sq) {
        Some(TestFlag::ConstantData) => Err(Error::DegenerateFit("the data are constant".into())),
        Some(TestFlag::PerfectFit) => Err(Error::DegenerateFit("the alternative model fits the data exactly".into())),
        None => Ok((rss0 - rss1) / rss1),
    }
}

fn check_dims(y: &[f64], m: &Matrix) -> Result<()> {
    if m.nrows() != y.len() || m.ncols() != y.len() {
        bail!(Validation, "data length {} does not match a {}x{} matrix", y.len(), m.nrows(), m.ncols());
    }
    Ok(())
}

/// `(y' M0 y - y' M1 y) / y' M1 y` for `y` as given.
pub fn f_statistic(y: &[f64], m0: &Matrix, m1: &Matrix) -> Result<f64> {
    check_dims(y, m0)?;
    check_dims(y, m1)?;
    let v = DVector::from_column_slice(y);
    ratio(quad(&v, m0), quad(&v, m1), v.norm_squared())
}

/// `(CVE0 - CVE1) / CVE1` with `CVE1 = |B' y|^2` and `CVE0 = y' M0 y`.
pub fn cvf_statistic(y: &[f64], b: &Matrix, m0_loo: &Matrix) -> Result<f64> {
    check_dims(y, b)?;
    check_dims(y, m0_loo)?;
    let v = DVector::from_column_slice(y);
    ratio(quad(&v, m0_loo), (b.transpose() * &v).norm_squared(), v.norm_squared())
}

/// Statistic of the centered data under a matrix pair.
pub fn observed_statistic(y: &[f64], m: &TestMatrices) -> Result<f64> {
    let (rss0, rss1, y_sq) = forms(y, m)?;
    ratio(rss0, rss1, y_sq)
}

/// `(y_c' M0 y_c, y_c' M1 y_c, |y|^2)` with `y_c` the centered data.
fn forms(y: &[f64], m: &TestMatrices) -> Result<(f64, f64, f64)> {
    check_dims(y, &m.m0)?;
    let yc = DVector::from_vec(m.center(y));
    Ok((quad(&yc, &m.m0), quad(&yc, &m.m1), y.iter().map(|v| v * v).sum()))
}

/// `P(T > t_obs)` under the null hypothesis.
pub fn p_value(t_obs: f64, m: &TestMatrices, evaluator: Evaluator) -> Result<(f64, PValueMethod)> {
    let survival_at_zero = |t: f64| {
        let (a, b) = m.null_pair();
        reduce_to_lambdas(a, b, t)
    };
    match evaluator {
        Evaluator::Auto if m.exact_f_valid => p_value(t_obs, m, Evaluator::ExactF),
        Evaluator::Auto | Evaluator::Saddlepoint => {
            let spec = survival_at_zero(t_obs)?;
            Ok((saddlepoint_survival(&spec, 0.0)?.survival, PValueMethod::Saddlepoint))
        }
        Evaluator::Imhof => {
            let spec = survival_at_zero(t_obs)?;
            Ok((imhof_survival(&spec, 0.0)?, PValueMethod::Imhof))
        }
        Evaluator::MonteCarlo { reps, seed } => Ok((mc_null_pvalue(m, t_obs, reps, seed)?, PValueMethod::MonteCarlo)),
        Evaluator::ExactF => {
            let Some(dof) = m.dof.filter(|_| m.exact_f_valid) else {
                bail!(Validation, "the exact F distribution does not apply to these matrices");
            };
            Ok((exact_f_survival(t_obs, dof)?, PValueMethod::ExactF))
        }
    }
}

/// Observed statistic, p-value and verdict at per-test level `alpha`.
///
/// Constant data yield statistic -1 and p-value 1; a perfect fit yields
/// `+inf` and 0. Both are flagged rather than treated as errors.
pub fn run_test(y: &[f64], m: &TestMatrices, evaluator: Evaluator, alpha: f64, cross: &[Evaluator]) -> Result<TestResult> {
    let (rss0, rss1, y_sq) = forms(y, m)?;
    let flagged = |statistic, p_value, flag| TestResult {
        statistic,
        p_value,
        method: PValueMethod::None,
        significant: p_value < alpha,
        flag: Some(flag),
        cross_checks: Vec::new(),
    };
    match classify(rss0, rss1, y_sq) {
        Some(TestFlag::ConstantData) => return Ok(flagged(-1.0, 1.0, TestFlag::ConstantData)),
        Some(TestFlag::PerfectFit) => return Ok(flagged(f64::INFINITY, 0.0, TestFlag::PerfectFit)),
        None => {}
    }
    let statistic = (rss0 - rss1) / rss1;
    let (p, method) = p_value(statistic, m, evaluator)?;
    let cross_checks = cross.iter().map(|&e| p_value(statistic, m, e).map(|(p, m)| (m, p))).collect::<Result<Vec<_>>>()?;
    Ok(TestResult { statistic, p_value: p, method, significant: p < alpha, flag: None, cross_checks })
}

/// Statistics of `reps` null data sets `y = V^(1/2) z` drawn with the
/// plug-in matrices.
pub fn simulate_null_statistics(m: &TestMatrices, reps: usize, seed: u64) -> Vec<f64> {
    let (a0, a1) = m.null_pair();
    let n = a0.nrows();
    let mut rng = rng_for(seed, 5);
    let mut z = DVector::zeros(n);
    let mut buf = DVector::zeros(n);
    (0..reps)
        .map(|_| {
            for v in z.iter_mut() {
                *v = StandardNormal.sample(&mut rng);
            }
            buf.gemv(1.0, a0, &z, 0.0);
            let q0 = z.dot(&buf);
            buf.gemv(1.0, a1, &z, 0.0);
            let q1 = z.dot(&buf);
            (q0 - q1) / q1
        })
        .collect()
}

/// Monte Carlo p-value: share of simulated null statistics above `t_obs`.
pub fn mc_null_pvalue(m: &TestMatrices, t_obs: f64, reps: usize, seed: u64) -> Result<f64> {
    if reps < MIN_MC_REPS {
        bail!(Domain, "Monte Carlo needs at least {MIN_MC_REPS} replicates, got {reps}");
    }
    let above = simulate_null_statistics(m, reps, seed).into_iter().filter(|&t| t > t_obs).count();
    Ok(above as f64 / reps as f64)
}

fn check_sidak(alpha_family: f64, m: usize) -> Result<()> {
    if !(alpha_family > 0.0 && alpha_family < 1.0) {
        bail!(Domain, "family-wise alpha must lie in (0, 1), got {alpha_family}");
    }
    if m == 0 {
        bail!(Domain, "number of tests must be at least 1");
    }
    Ok(())
}

/// Per-test confidence level `(1 - alpha)^(1/m)` of the Sidak correction.
pub fn sidak_level(alpha_family: f64, m: usize) -> Result<f64> {
    check_sidak(alpha_family, m)?;
    Ok((libm::log1p(-alpha_family) / m as f64).exp())
}

/// Per-test significance level `1 - (1 - alpha)^(1/m)`, without cancellation.
pub fn sidak_alpha(alpha_family: f64, m: usize) -> Result<f64> {
    check_sidak(alpha_family, m)?;
    Ok(-libm::expm1(libm::log1p(-alpha_family) / m as f64))
}
