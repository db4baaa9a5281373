//! Internal consistency checks between the p-value evaluators and the
//! closed-form leave-one-out identity.

use serde::Serialize;
use sppgram_core::covariance::periodic_kernel;
use sppgram_core::models::{loo_matrices, sinusoid_m1};
use sppgram_core::quadform::{exact_f_survival, imhof_survival, mc_survival, reduce_to_lambdas, saddlepoint_survival};
use sppgram_core::simulate::{rng_for, sampling_times, Sampling};
use sppgram_core::testing::observed_statistic;
use sppgram_core::{Matrix, QuadFormSpec, Result};

use rand::Rng;

/// Deliberate corruption used to confirm that the checks can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Fault {
    #[default]
    None,
    /// Scales the largest positive weight before it reaches the saddlepoint.
    Lambda,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelfTestReport {
    pub checks: Vec<Check>,
}

impl SelfTestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

const SP_TOL: f64 = 5e-3;

fn corrupt(spec: &QuadFormSpec, fault: Fault) -> QuadFormSpec {
    let mut out = spec.clone();
    if fault == Fault::Lambda {
        if let Some(i) = (0..out.lambdas.len()).max_by(|&a, &b| out.lambdas[a].total_cmp(&out.lambdas[b])) {
            out.lambdas[i] *= 1.5;
        }
    }
    out
}

fn fixtures(quick: bool) -> Result<Vec<(String, QuadFormSpec)>> {
    let mut out = vec![
        ("alternating".to_string(), QuadFormSpec::new((0..40).map(|i| if i % 2 == 0 { 1.0 - 0.02 * i as f64 } else { -0.7 + 0.01 * i as f64 }).collect())?),
        ("few_large".to_string(), QuadFormSpec::new((0..30).map(|i| if i < 3 { 4.0 - i as f64 } else { -0.15 }).collect())?),
    ];
    let sizes: &[usize] = if quick { &[30] } else { &[30, 80] };
    for &n in sizes {
        let times = sampling_times(&Sampling::Uniform { n, timespan: 50.0 }, 11 + n as u64)?;
        let k = periodic_kernel(&times, 1.0, 3.7, 1.0)?.matrix;
        let loo = loo_matrices(&k, 0.5)?;
        let m1 = &loo.b * loo.b.transpose();
        let y: Vec<f64> = (0..n).map(|j| (times[j] * 1.7).sin() + 0.3 * (j as f64).cos()).collect();
        let t = cvf_ratio(&y, &loo.m0, &m1);
        out.push((format!("gpr_cvf_n{n}"), reduce_to_lambdas(&loo.m0, &m1, t)?));
    }
    Ok(out)
}

fn cvf_ratio(y: &[f64], m0: &Matrix, m1: &Matrix) -> f64 {
    let v = Matrix::from_column_slice(y.len(), 1, y);
    let a = (v.transpose() * m0 * &v)[(0, 0)];
    let b = (v.transpose() * m1 * &v)[(0, 0)];
    (a - b) / b
}

fn check_saddlepoint_vs_imhof(name: &str, spec: &QuadFormSpec, fault: Fault) -> Result<Check> {
    let sp_spec = corrupt(spec, fault);
    let (mean, sd) = (spec.mean(), spec.variance().sqrt());
    let mut worst: f64 = 0.0;
    for k in [-1.5, -0.5, 0.0, 0.5, 1.5, 3.0] {
        let x = mean + k * sd;
        let exact = imhof_survival(spec, x)?;
        if !(1e-3..=0.999).contains(&exact) {
            continue;
        }
        worst = worst.max((saddlepoint_survival(&sp_spec, x)?.survival - exact).abs());
    }
    Ok(Check {
        name: format!("saddlepoint_vs_imhof/{name}"),
        passed: worst <= SP_TOL,
        detail: format!("max |saddlepoint - imhof| = {worst:.2e} (tolerance {SP_TOL:.0e})"),
    })
}

fn check_mc_vs_imhof(name: &str, spec: &QuadFormSpec, reps: usize) -> Result<Check> {
    let x = spec.mean() + 0.5 * spec.variance().sqrt();
    let exact = imhof_survival(spec, x)?;
    let mc = mc_survival(spec, x, reps, 5)?;
    let tol = 4.0 * (exact * (1.0 - exact) / reps as f64).sqrt() + 1e-3;
    Ok(Check {
        name: format!("mc_vs_imhof/{name}"),
        passed: (mc - exact).abs() <= tol,
        detail: format!("monte carlo {mc:.4} vs imhof {exact:.4} with {reps} replicates"),
    })
}

fn check_exact_f(fault: Fault, fixtures: usize) -> Result<Vec<Check>> {
    let mut rng = rng_for(99, 0);
    let (mut worst_sp, mut worst_imhof): (f64, f64) = (0.0, 0.0);
    for f in 0..fixtures {
        let times = sampling_times(&Sampling::Uniform { n: 30, timespan: 40.0 }, 200 + f as u64)?;
        let m = sinusoid_m1(&times, 2.0 + rng.random::<f64>() * 6.0, None)?;
        let y: Vec<f64> = (0..30).map(|_| rng.random::<f64>() - 0.5).collect();
        let t = observed_statistic(&y, &m)?;
        let exact = exact_f_survival(t, m.dof.expect("sinusoid matrices carry degrees of freedom"))?;
        let spec = reduce_to_lambdas(&m.m0, &m.m1, t)?;
        worst_sp = worst_sp.max((saddlepoint_survival(&corrupt(&spec, fault), 0.0)?.survival - exact).abs());
        worst_imhof = worst_imhof.max((imhof_survival(&spec, 0.0)? - exact).abs());
    }
    Ok(vec![
        Check {
            name: "exact_f_vs_saddlepoint".into(),
            passed: worst_sp <= SP_TOL,
            detail: format!("max difference {worst_sp:.2e} over {fixtures} sinusoid fixtures"),
        },
        Check {
            name: "exact_f_vs_imhof".into(),
            passed: worst_imhof <= 1e-6,
            detail: format!("max difference {worst_imhof:.2e} over {fixtures} sinusoid fixtures"),
        },
    ])
}

/// `sum_j (y_j - E[y_j | y_-j])^2`, one conditional solve per point.
fn brute_force_cve(k: &Matrix, noise: f64, y: &[f64]) -> Result<f64> {
    let n = y.len();
    let mut total = 0.0;
    for j in 0..n {
        let idx: Vec<usize> = (0..n).filter(|&i| i != j).collect();
        let s = Matrix::from_fn(n - 1, n - 1, |a, b| k[(idx[a], idx[b])] + if a == b { noise } else { 0.0 });
        let rhs = Matrix::from_fn(n - 1, 1, |a, _| y[idx[a]]);
        let chol = s.cholesky().ok_or_else(|| sppgram_core::Error::Numerical("leave-one-out covariance is not positive definite".into()))?;
        let coef = chol.solve(&rhs);
        let pred: f64 = idx.iter().enumerate().map(|(a, &i)| k[(j, i)] * coef[(a, 0)]).sum();
        total += (y[j] - pred).powi(2);
    }
    Ok(total)
}

fn check_loo() -> Result<Check> {
    let mut worst: f64 = 0.0;
    for n in [5, 12, 20] {
        let times = sampling_times(&Sampling::Uniform { n, timespan: 15.0 }, 31 + n as u64)?;
        let k = periodic_kernel(&times, 2.0, 2.9, 0.8)?.matrix;
        let y: Vec<f64> = times.iter().map(|t| (t * 2.1).sin() + 0.1 * t).collect();
        let loo = loo_matrices(&k, 0.3)?;
        let v = Matrix::from_column_slice(n, 1, &y);
        let closed = (v.transpose() * &loo.b * loo.b.transpose() * &v)[(0, 0)];
        let brute = brute_force_cve(&k, 0.3, &y)?;
        worst = worst.max((closed - brute).abs() / brute);
    }
    Ok(Check {
        name: "loo_closed_form".into(),
        passed: worst <= 1e-9,
        detail: format!("max relative difference {worst:.2e} for n = 5, 12, 20"),
    })
}

/// Runs every check. `quick` trims fixture counts and Monte-Carlo
/// replicates to finish in well under a second.
pub fn run_selftest(quick: bool, fault: Fault) -> Result<SelfTestReport> {
    let mut checks = Vec::new();
    let specs = fixtures(quick)?;
    for (name, spec) in &specs {
        checks.push(check_saddlepoint_vs_imhof(name, spec, fault)?);
    }
    let reps = if quick { 4_000 } else { 40_000 };
    for (name, spec) in specs.iter().take(2) {
        checks.push(check_mc_vs_imhof(name, spec, reps)?);
    }
    checks.extend(check_exact_f(fault, if quick { 5 } else { 25 })?);
    checks.push(check_loo()?);
    Ok(SelfTestReport { checks })
}
