use alloc::vec;
use alloc::vec::Vec;

use nalgebra::linalg::Cholesky;
use nalgebra::{DVector, Dyn};
use num_traits::Float;

use super::{precenter, sandwich_diag, Family, FitConfig, FitResult, Objective, Statistic, TestMatrices};
use crate::covariance::{cholesky, sqrt_sym, symmetrize, KernelParams, PhaseDistance, TimeLags};
use crate::error::{bail, Error, Result};
use crate::lightcurve::LightCurve;
use crate::optimize::{nelder_mead, Bounded, NelderMeadConfig};
use crate::Matrix;

/// Smoother `W = K (K + s^2 Q^-2)^-1` with `Q = diag(weights)`, or
/// `K (K + s^2 I)^-1` without weights.
pub fn gpr_smoother(k: &Matrix, noise_variance: f64, weights: Option<&[f64]>) -> Result<Matrix> {
    let n = k.nrows();
    if !(noise_variance > 0.0 && noise_variance.is_finite()) {
        bail!(Domain, "noise variance must be positive, got {noise_variance}");
    }
    let mut s = k.clone();
    for j in 0..n {
        let v = weights.map_or(1.0, |q| 1.0 / (q[j] * q[j]));
        s[(j, j)] += noise_variance * v;
    }
    let chol = cholesky(&s)?;
    // K S^-1 = (S^-1 K)' for symmetric K and S
    Ok(chol.solve(k).transpose())
}

/// `(I - W)' (I - W)`, symmetrized.
pub fn residual_matrix(w: &Matrix) -> Matrix {
    let n = w.nrows();
    let e = Matrix::identity(n, n) - w;
    let mut m = e.transpose() * e;
    symmetrize(&mut m);
    m
}

/// Leave-one-out operators for fixed hyperparameters.
#[derive(Debug, Clone)]
pub struct LooMatrices {
    /// `B = G D^-1` with `G = (K + s^2 I)^-1` and `D = diag(G)`, so that
    /// `CVE = y' B B' y`.
    pub b: Matrix,
    /// `M M'` where `M y` holds `y_j` minus the mean of the other points.
    pub m0: Matrix,
}

pub fn loo_matrices(k: &Matrix, noise_variance: f64) -> Result<LooMatrices> {
    let n = k.nrows();
    if n < 2 {
        bail!(Domain, "leave-one-out needs n >= 2");
    }
    let mut s = k.clone();
    for j in 0..n {
        s[(j, j)] += noise_variance;
    }
    let g = inverse_spd(&s)?;
    let d: Vec<f64> = g.diagonal().iter().copied().collect();
    if let Some(bad) = d.iter().find(|v| !(**v > 0.0)) {
        bail!(Numerical, "non-positive diagonal {bad} in the inverse covariance");
    }
    let b = Matrix::from_fn(n, n, |j, c| g[(j, c)] / d[c]);
    let off = -1.0 / (n as f64 - 1.0);
    let m = Matrix::from_fn(n, n, |j, c| if j == c { 1.0 } else { off });
    Ok(LooMatrices { b, m0: &m * m.transpose() })
}

fn inverse_spd(s: &Matrix) -> Result<Matrix> {
    let n = s.nrows();
    let chol = cholesky(s)?;
    let mut g = chol.solve(&Matrix::identity(n, n));
    symmetrize(&mut g);
    Ok(g)
}

/// F and CVF matrices from one factorization; `None` where not requested.
#[derive(Debug, Clone)]
pub struct GprMatrices {
    pub f: Option<TestMatrices>,
    pub cvf: Option<TestMatrices>,
}

/// Null noise covariance `V` (up to `sigma^2`) of a family.
enum NoiseCov {
    White,
    Diag(Vec<f64>),
    Red(Matrix),
}

fn noise_cov(lc: &LightCurve, family: Family, rho: f64) -> Result<NoiseCov> {
    Ok(match family {
        Family::GprWeighted => match lc.accuracies() {
            Some(s) => NoiseCov::Diag(s.iter().map(|s| s * s).collect()),
            None => bail!(Validation, "weighted fit needs measurement accuracies"),
        },
        Family::GprRed if rho != 0.0 => NoiseCov::Red(TimeLags::new(lc.times()).correlation(rho)?),
        _ => NoiseCov::White,
    })
}

/// Builds the requested statistics' matrices for fixed hyperparameters.
///
/// With `G = (K + s^2 V)^-1` the residual operator is `I - W = s^2 V G`.
/// Residual sums of squares are weighted by `Omega = V^-1` in the weighted
/// family and unweighted otherwise, giving `M1 = (I-W)' Omega (I-W)` for F
/// and `M1 = G D^-1 Omega D^-1 G` for CVF (`D = diag(G)`). The CVF
/// residuals are `y_j - E[y_j | y_-j]` under the full covariance, so under
/// red noise the prediction also uses the correlated noise of neighbours.
pub fn gpr_test_matrices(lc: &LightCurve, params: &KernelParams, family: Family, stats: &[Statistic]) -> Result<GprMatrices> {
    if !family.is_gpr() {
        bail!(Validation, "{family:?} is not a Gaussian process family");
    }
    params.validate()?;
    let n = lc.n();
    let times = lc.times();
    let cov = noise_cov(lc, family, params.rho)?;

    let mut sigma = PhaseDistance::new(times, params.period)?.correlation(params.smoothness);
    sigma *= params.amplitude;
    match &cov {
        NoiseCov::White => {
            for j in 0..n {
                sigma[(j, j)] += params.noise_variance;
            }
        }
        NoiseCov::Diag(v) => {
            for j in 0..n {
                sigma[(j, j)] += params.noise_variance * v[j];
            }
        }
        NoiseCov::Red(c) => sigma += c * params.noise_variance,
    }
    let g = inverse_spd(&sigma)?;

    let omega: Vec<f64> = match &cov {
        NoiseCov::Diag(v) => v.iter().map(|v| 1.0 / v).collect(),
        _ => vec![1.0; n],
    };
    let omega_sum: f64 = omega.iter().sum();
    let w: Vec<f64> = omega.iter().map(|o| o / omega_sum).collect();
    let null_root = match &cov {
        NoiseCov::White => None,
        NoiseCov::Diag(v) => Some(NullRoot::Diag(v.iter().map(|v| v.sqrt()).collect())),
        NoiseCov::Red(c) => Some(NullRoot::Full(sqrt_sym(c)?)),
    };
    let finish = |mut m0: Matrix, mut m1: Matrix| {
        precenter(&mut m0, &w);
        precenter(&mut m1, &w);
        symmetrize(&mut m0);
        symmetrize(&mut m1);
        let (null_m0, null_m1) = match &null_root {
            None => (None, None),
            Some(root) => (Some(root.sandwich(&m0)), Some(root.sandwich(&m1))),
        };
        TestMatrices { m0, m1, null_m0, null_m1, exact_f_valid: false, dof: None, center_weights: w.clone() }
    };

    let f = if stats.contains(&Statistic::F) {
        let mut e = match &cov {
            NoiseCov::White => g.clone(),
            NoiseCov::Diag(v) => Matrix::from_fn(n, n, |j, k| v[j] * g[(j, k)]),
            NoiseCov::Red(c) => c * &g,
        };
        e *= params.noise_variance;
        let scaled = Matrix::from_fn(n, n, |j, k| omega[j].sqrt() * e[(j, k)]);
        let m1 = scaled.transpose() * &scaled;
        let m0 = Matrix::from_diagonal(&DVector::from_vec(omega.clone()));
        Some(finish(m0, m1))
    } else {
        None
    };

    let cvf = if stats.contains(&Statistic::Cvf) {
        let d: Vec<f64> = g.diagonal().iter().copied().collect();
        if let Some(bad) = d.iter().find(|v| !(**v > 0.0)) {
            bail!(Numerical, "non-positive diagonal {bad} in the inverse covariance");
        }
        // rows of D^-1 G scaled by sqrt(omega): the LOO residual operator
        let r = Matrix::from_fn(n, n, |j, k| omega[j].sqrt() * g[(j, k)] / d[j]);
        let m1 = r.transpose() * &r;
        // y_j minus the (weighted) mean of the others is `S / (S - omega_j)` times `y_j - ybar_w`
        let m0 = Matrix::from_diagonal(&DVector::from_fn(n, |j, _| {
            let f = omega_sum / (omega_sum - omega[j]);
            f * f * omega[j]
        }));
        Some(finish(m0, m1))
    } else {
        None
    };
    Ok(GprMatrices { f, cvf })
}

enum NullRoot {
    Diag(Vec<f64>),
    Full(Matrix),
}

impl NullRoot {
    fn sandwich(&self, m: &Matrix) -> Matrix {
        let mut out = match self {
            NullRoot::Diag(d) => sandwich_diag(m, d),
            NullRoot::Full(s) => s * m * s,
        };
        symmetrize(&mut out);
        out
    }
}

/// Objective evaluation for one trial period, reusing the phase distances
/// and time lags across all hyperparameter values the search tries.
struct FitProblem {
    n: usize,
    y: DVector<f64>,
    phase: PhaseDistance,
    lags: Option<TimeLags>,
    /// Diagonal of `V`, normalized to unit mean, for the weighted family.
    v: Option<Vec<f64>>,
    v_scale: f64,
    objective: Objective,
    buf: Matrix,
    red: Matrix,
}

impl FitProblem {
    fn new(lc: &LightCurve, period: f64, family: Family, objective: Objective) -> Result<Self> {
        let n = lc.n();
        let (v, v_scale) = match family {
            Family::GprWeighted => {
                let s = lc.accuracies().ok_or_else(|| Error::Validation("weighted fit needs measurement accuracies".into()))?;
                let raw: Vec<f64> = s.iter().map(|s| s * s).collect();
                let mean = raw.iter().sum::<f64>() / n as f64;
                (Some(raw.iter().map(|r| r / mean).collect::<Vec<_>>()), mean)
            }
            _ => (None, 1.0),
        };
        let w: Vec<f64> = match &v {
            Some(v) => {
                let total: f64 = v.iter().map(|v| 1.0 / v).sum();
                v.iter().map(|v| 1.0 / v / total).collect()
            }
            None => vec![1.0 / n as f64; n],
        };
        let mean: f64 = w.iter().zip(lc.values()).map(|(w, y)| w * y).sum();
        let y = DVector::from_iterator(n, lc.values().iter().map(|y| y - mean));
        let lags = (family == Family::GprRed).then(|| TimeLags::new(lc.times()));
        Ok(Self {
            n,
            y,
            phase: PhaseDistance::new(lc.times(), period)?,
            lags,
            v,
            v_scale,
            objective,
            buf: Matrix::zeros(n, n),
            red: Matrix::zeros(n, n),
        })
    }

    /// `tau R(h) + V(rho)`, factorized.
    fn factor(&mut self, tau: f64, h: f64, rho: f64) -> Option<Cholesky<f64, Dyn>> {
        self.phase.correlation_into(h, &mut self.buf);
        self.buf *= tau;
        match (&self.lags, &self.v) {
            (Some(lags), _) if rho > 0.0 => {
                lags.correlation_into(rho, &mut self.red).ok()?;
                self.buf += &self.red;
            }
            (_, Some(v)) => {
                for j in 0..self.n {
                    self.buf[(j, j)] += v[j];
                }
            }
            _ => {
                for j in 0..self.n {
                    self.buf[(j, j)] += 1.0;
                }
            }
        }
        Cholesky::new(self.buf.clone())
    }

    /// Minimization target: negative profiled log-likelihood (without
    /// constants) or the LOO cross-validation error.
    fn value(&mut self, tau: f64, h: f64, rho: f64) -> f64 {
        let Some(chol) = self.factor(tau, h, rho) else { return f64::NAN };
        let n = self.n as f64;
        match self.objective {
            Objective::MarginalLikelihood => {
                let alpha = self.y.dot(&chol.solve(&self.y));
                let ln_det = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
                0.5 * n * (alpha / n).ln() + 0.5 * ln_det
            }
            Objective::LooCve => {
                let gy = chol.solve(&self.y);
                let l = chol.l();
                let Some(linv) = l.solve_lower_triangular(&Matrix::identity(self.n, self.n)) else { return f64::NAN };
                let mut cve = 0.0;
                for j in 0..self.n {
                    let gjj = linv.column(j).norm_squared();
                    let r = gy[j] / gjj;
                    let omega = self.v.as_ref().map_or(1.0, |v| 1.0 / v[j]);
                    cve += omega * r * r;
                }
                cve
            }
        }
    }

    /// Profiled noise variance `y' (tau R + V)^-1 y / n` in the units of `V`.
    fn sigma2(&mut self, tau: f64, h: f64, rho: f64) -> Option<f64> {
        let chol = self.factor(tau, h, rho)?;
        Some(self.y.dot(&chol.solve(&self.y)) / self.n as f64)
    }
}

/// Start points in `(log tau, log h, rho)`.
const STARTS: [(f64, f64, f64); 5] = [(0.0, 0.0, 0.3), (-2.0, 0.5, 0.1), (2.0, -0.5, 0.6), (-4.0, 1.2, 0.05), (1.0, -1.2, 0.85)];

/// Fits amplitude, smoothness, noise variance (and `rho` for red noise) at a
/// fixed trial period by maximizing the marginal likelihood or minimizing
/// the LOO cross-validation error.
///
/// The search runs over `tau = A / sigma^2`, `h` and `rho` with `sigma^2`
/// profiled out analytically (the CVE does not depend on it, and it is then
/// set to its likelihood estimate).
pub fn fit_gpr(lc: &LightCurve, period: f64, family: Family, objective: Objective, config: &FitConfig) -> Result<FitResult> {
    if !family.is_gpr() {
        bail!(Validation, "{family:?} is not a Gaussian process family");
    }
    config.validate()?;
    let mut problem = FitProblem::new(lc, period, family, objective)?;
    let red = family == Family::GprRed;
    let b_tau = Bounded::new(config.log_tau_bounds.0, config.log_tau_bounds.1);
    let b_h = Bounded::new(config.log_h_bounds.0, config.log_h_bounds.1);
    let b_rho = Bounded::new(0.0, config.rho_max);
    let decode = |u: &[f64]| {
        let rho = if red { b_rho.to_bounded(u[2]) } else { 0.0 };
        (b_tau.to_bounded(u[0]).exp(), b_h.to_bounded(u[1]).exp(), rho)
    };
    let nm = NelderMeadConfig { max_evals: config.max_evals, f_tol: config.tol, x_tol: 1e-3 };
    let step: &[f64] = if red { &[0.4, 0.5, 0.6] } else { &[0.4, 0.5] };

    // Best point as (f, tau, h, rho, converged).
    let mut best: Option<(f64, f64, f64, f64, bool)> = None;
    let mut evals = 0;
    let mut keep = |m: &crate::optimize::Minimum, cand: (f64, f64, f64)| {
        if m.f.is_finite() && best.is_none_or(|b| m.f < b.0) {
            best = Some((m.f, cand.0, cand.1, cand.2, m.converged));
        }
    };
    if red {
        // rho^|dt| does not tend to the identity as rho -> 0 when some time
        // gaps are tiny, so the white-noise edge is searched on its own.
        for &(lt, lh, _) in STARTS.iter().cycle().take(config.starts) {
            let x0 = [b_tau.to_free(lt), b_h.to_free(lh)];
            let m = nelder_mead(|u| problem.value(b_tau.to_bounded(u[0]).exp(), b_h.to_bounded(u[1]).exp(), 0.0), &x0, &step[..2], &nm);
            evals += m.evals;
            keep(&m, (b_tau.to_bounded(m.x[0]).exp(), b_h.to_bounded(m.x[1]).exp(), 0.0));
        }
    }
    for &(lt, lh, rho) in STARTS.iter().cycle().take(config.starts) {
        let mut x0 = vec![b_tau.to_free(lt), b_h.to_free(lh)];
        if red {
            x0.push(b_rho.to_free(rho));
        }
        let m = nelder_mead(
            |u| {
                let (tau, h, rho) = decode(u);
                problem.value(tau, h, rho)
            },
            &x0,
            step,
            &nm,
        );
        evals += m.evals;
        keep(&m, decode(&m.x));
    }
    let Some((best_f, tau, h, rho, converged)) = best else {
        bail!(Fit, "objective was not finite at any start point (period {period})");
    };
    let sigma2 = problem.sigma2(tau, h, rho).filter(|s| *s > 0.0 && s.is_finite()).ok_or_else(|| {
        Error::DegenerateFit(alloc::format!("data have no variation left to fit at period {period}"))
    })?;
    let noise_variance = sigma2 / problem.v_scale;
    let hyperparams = KernelParams { amplitude: tau * sigma2, period, smoothness: h, noise_variance, rho };
    let n = problem.n as f64;
    let objective_value = match objective {
        Objective::MarginalLikelihood => -best_f - 0.5 * n * (1.0 + (2.0 * core::f64::consts::PI).ln()),
        Objective::LooCve => best_f,
    };
    Ok(FitResult { hyperparams, objective: objective_value, converged, iterations: evals })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::periodic_kernel;
    use crate::simulate::{simulate, Noise, Sampling, SimScenario, Signal};

    fn small_curve(n: usize) -> LightCurve {
        let t: Vec<f64> = (0..n).map(|i| i as f64 * 0.83 + 0.2 * (i as f64 * 2.1).sin()).collect();
        let y: Vec<f64> = t.iter().map(|t| 10.0 + (2.0 * core::f64::consts::PI * t / 2.7).sin() + 0.3 * (t * 3.3).cos()).collect();
        LightCurve::new(t, y, None).unwrap()
    }

    #[test]
    fn smoother_limits() {
        let lc = small_curve(12);
        let k = periodic_kernel(lc.times(), 1.3, 2.7, 0.8).unwrap().matrix;
        let big = 1e8 * k.trace() / 12.0;
        let w = gpr_smoother(&k, big, None).unwrap();
        assert!(w.amax() < 1e-4);
        assert!((residual_matrix(&w) - Matrix::identity(12, 12)).amax() < 1e-4);
        let zero = periodic_kernel(lc.times(), 0.0, 2.7, 0.8).unwrap().matrix;
        assert!(gpr_smoother(&zero, 0.5, None).unwrap().amax() == 0.0);
    }

    #[test]
    fn smoother_matches_posterior_mean() {
        // posterior mean K (K + s^2 I)^-1 y through an LU solve instead of Cholesky
        let lc = small_curve(30);
        let k = periodic_kernel(lc.times(), 0.9, 2.7, 1.1).unwrap().matrix;
        let y = DVector::from_column_slice(lc.values());
        let s = &k + Matrix::identity(30, 30) * 0.2;
        let mean = &k * s.lu().solve(&y).unwrap();
        let w = gpr_smoother(&k, 0.2, None).unwrap();
        assert!((w * &y - mean).amax() < 1e-10);
    }

    fn brute_force_cve(k: &Matrix, s2: f64, y: &[f64]) -> f64 {
        let n = y.len();
        let mut cve = 0.0;
        for j in 0..n {
            let idx: Vec<usize> = (0..n).filter(|&i| i != j).collect();
            let sub = Matrix::from_fn(n - 1, n - 1, |a, b| k[(idx[a], idx[b])] + if a == b { s2 } else { 0.0 });
            let ys = DVector::from_iterator(n - 1, idx.iter().map(|&i| y[i]));
            let kj = DVector::from_iterator(n - 1, idx.iter().map(|&i| k[(j, i)]));
            let pred = kj.dot(&sub.lu().solve(&ys).unwrap());
            cve += (y[j] - pred).powi(2);
        }
        cve
    }

    #[test]
    fn loo_identity_matches_brute_force() {
        for &n in &[5usize, 12, 20] {
            let lc = small_curve(n);
            let k = periodic_kernel(lc.times(), 1.7, 2.7, 0.6).unwrap().matrix;
            let y = DVector::from_column_slice(lc.values());
            let loo = loo_matrices(&k, 0.3).unwrap();
            let bty = loo.b.transpose() * &y;
            let cve = bty.norm_squared();
            let want = brute_force_cve(&k, 0.3, lc.values());
            assert!((cve - want).abs() < 1e-8 * want.max(1.0), "n={n}: {cve} vs {want}");
        }
    }

    #[test]
    fn loo_mean_operator() {
        let loo = loo_matrices(&Matrix::zeros(3, 3), 1.0).unwrap();
        // M is symmetric, so M M' = M' M and y' M0 y = |M y|^2
        let y = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        assert!(((y.transpose() * &loo.m0 * &y)[0] - 4.5).abs() < 1e-12);
        // zero prior: the LOO prediction is 0 and CVE = sum y^2
        let cve = (loo.b.transpose() * &y).norm_squared();
        assert!((cve - 14.0).abs() < 1e-12);
    }

    #[test]
    fn pipeline_matrices_match_direct_construction() {
        let lc = small_curve(25);
        let p = KernelParams { amplitude: 1.2, period: 2.7, smoothness: 0.9, noise_variance: 0.4, rho: 0.0 };
        let gm = gpr_test_matrices(&lc, &p, Family::Gpr, &[Statistic::F, Statistic::Cvf]).unwrap();
        let k = periodic_kernel(lc.times(), 1.2, 2.7, 0.9).unwrap().matrix;
        let h = crate::models::centering_m0(25).unwrap();

        let f = gm.f.unwrap();
        let m1 = &h * residual_matrix(&gpr_smoother(&k, 0.4, None).unwrap()) * &h;
        assert!((&f.m1 - m1).amax() < 1e-10);
        assert!((&f.m0 - &h).amax() < 1e-12);

        let cvf = gm.cvf.unwrap();
        let loo = loo_matrices(&k, 0.4).unwrap();
        assert!((&cvf.m1 - &h * &loo.b * loo.b.transpose() * &h).amax() < 1e-10);
        assert!((&cvf.m0 - &loo.m0).amax() < 1e-12);
    }

    #[test]
    fn gpr_m1_is_not_a_projection() {
        let lc = small_curve(40);
        let p = KernelParams { amplitude: 1.0, period: 2.7, smoothness: 0.7, noise_variance: 0.3, rho: 0.0 };
        let f = gpr_test_matrices(&lc, &p, Family::Gpr, &[Statistic::F]).unwrap().f.unwrap();
        let eig = crate::covariance::sym_eigenvalues(&f.m1);
        assert!(eig.iter().all(|&l| l > -1e-12 && l < 1.0 + 1e-12));
        let interior = eig.iter().filter(|&&l| l > 1e-6 && l < 1.0 - 1e-6).count();
        assert!(interior > 3, "{interior} eigenvalues strictly inside (0, 1)");
    }

    #[test]
    fn red_with_zero_rho_is_white() {
        let lc = small_curve(30);
        let p = KernelParams { amplitude: 1.0, period: 2.7, smoothness: 0.7, noise_variance: 0.3, rho: 0.0 };
        let both = [Statistic::F, Statistic::Cvf];
        let white = gpr_test_matrices(&lc, &p, Family::Gpr, &both).unwrap();
        let red = gpr_test_matrices(&lc, &p, Family::GprRed, &both).unwrap();
        assert_eq!(white.f, red.f);
        assert_eq!(white.cvf, red.cvf);
    }

    #[test]
    fn red_null_matrices_are_sandwiched() {
        let lc = small_curve(20);
        let p = KernelParams { amplitude: 1.0, period: 2.7, smoothness: 0.7, noise_variance: 0.3, rho: 0.4 };
        let f = gpr_test_matrices(&lc, &p, Family::GprRed, &[Statistic::F]).unwrap().f.unwrap();
        let c = TimeLags::new(lc.times()).correlation(0.4).unwrap();
        let s = sqrt_sym(&c).unwrap();
        assert!((f.null_m1.as_ref().unwrap() - &s * &f.m1 * &s).amax() < 1e-12);
        // observed-statistic matrices use I - W = s^2 C G unsandwiched
        let mut sigma = periodic_kernel(lc.times(), 1.0, 2.7, 0.7).unwrap().matrix;
        sigma += &c * 0.3;
        let e = &c * sigma.try_inverse().unwrap() * 0.3;
        let h = crate::models::centering_m0(20).unwrap();
        assert!((&f.m1 - &h * e.transpose() * &e * &h).amax() < 1e-9);
    }

    /// `sum_j (y_j - E[y_j | y_-j])^2` by deleting each point in turn.
    fn brute_force_full_cve(k: &Matrix, noise: &Matrix, y: &[f64]) -> f64 {
        let n = y.len();
        let s = k + noise;
        (0..n)
            .map(|j| {
                let idx: Vec<usize> = (0..n).filter(|&i| i != j).collect();
                let sub = Matrix::from_fn(n - 1, n - 1, |a, b| s[(idx[a], idx[b])]);
                let ys = DVector::from_iterator(n - 1, idx.iter().map(|&i| y[i]));
                let sj = DVector::from_iterator(n - 1, idx.iter().map(|&i| s[(j, i)]));
                (y[j] - sj.dot(&sub.lu().solve(&ys).unwrap())).powi(2)
            })
            .sum()
    }

    #[test]
    fn red_loo_matches_brute_force() {
        for &n in &[6usize, 12, 20] {
            let lc = small_curve(n);
            let p = KernelParams { amplitude: 1.3, period: 2.7, smoothness: 0.7, noise_variance: 0.4, rho: 0.35 };
            let k = periodic_kernel(lc.times(), p.amplitude, p.period, p.smoothness).unwrap().matrix;
            let c = TimeLags::new(lc.times()).correlation(p.rho).unwrap();
            let mean = lc.values().iter().sum::<f64>() / n as f64;
            let yc: Vec<f64> = lc.values().iter().map(|v| v - mean).collect();
            let want = brute_force_full_cve(&k, &(&c * p.noise_variance), &yc);

            let cvf = gpr_test_matrices(&lc, &p, Family::GprRed, &[Statistic::Cvf]).unwrap().cvf.unwrap();
            let y = DVector::from_vec(yc.clone());
            let got = y.dot(&(&cvf.m1 * &y));
            assert!((got - want).abs() < 1e-9 * want, "n={n}: {got} vs {want}");

            // the fit objective works in units of sigma^2
            let mut problem = FitProblem::new(&lc, p.period, Family::GprRed, Objective::LooCve).unwrap();
            let obj = problem.value(p.amplitude / p.noise_variance, p.smoothness, p.rho);
            assert!((obj - want).abs() < 1e-9 * want, "n={n}: {obj} vs {want}");
        }
    }

    fn gpr_curve(seed: u64, n: usize, snr: f64) -> LightCurve {
        simulate(&SimScenario {
            sampling: Sampling::Uniform { n, timespan: 80.0 },
            signal: Signal::GprPrior { amplitude: 1.0, period: 5.2, smoothness: 0.8 },
            noise: Noise::White { variance: 1.0 },
            accuracies: None,
            target_snr: Some(snr),
            seed,
            signal_seed: None,
        })
        .unwrap()
    }

    #[test]
    fn fit_is_deterministic_and_in_bounds() {
        let lc = gpr_curve(3, 80, 2.0);
        let cfg = FitConfig::default();
        let a = fit_gpr(&lc, 5.2, Family::Gpr, Objective::MarginalLikelihood, &cfg).unwrap();
        let b = fit_gpr(&lc, 5.2, Family::Gpr, Objective::MarginalLikelihood, &cfg).unwrap();
        assert_eq!(a, b);
        let h = a.hyperparams.smoothness.ln();
        assert!((-3.0..=3.0).contains(&h));
        assert!(a.objective.is_finite() && a.hyperparams.noise_variance > 0.0);
    }

    #[test]
    fn likelihood_objective_matches_direct_evaluation() {
        let lc = gpr_curve(5, 60, 1.5);
        let fit = fit_gpr(&lc, 5.2, Family::Gpr, Objective::MarginalLikelihood, &FitConfig::default()).unwrap();
        let p = fit.hyperparams;
        let mut sigma = periodic_kernel(lc.times(), p.amplitude, 5.2, p.smoothness).unwrap().matrix;
        for j in 0..60 {
            sigma[(j, j)] += p.noise_variance;
        }
        let mean = lc.values().iter().sum::<f64>() / 60.0;
        let y = DVector::from_iterator(60, lc.values().iter().map(|v| v - mean));
        let direct = -0.5 * y.dot(&sigma.clone().lu().solve(&y).unwrap()) - 0.5 * sigma.determinant().ln() - 30.0 * (2.0 * core::f64::consts::PI).ln();
        assert!((fit.objective - direct).abs() < 1e-8 * direct.abs(), "{} vs {direct}", fit.objective);
    }

    #[test]
    fn weighted_fit_reports_noise_in_accuracy_units() {
        let base = gpr_curve(9, 60, 2.0);
        let acc: Vec<f64> = (0..60).map(|j| 0.5 + 0.01 * j as f64).collect();
        let lc = LightCurve::new(base.times().to_vec(), base.values().to_vec(), Some(acc)).unwrap();
        let fit = fit_gpr(&lc, 5.2, Family::GprWeighted, Objective::MarginalLikelihood, &FitConfig::default()).unwrap();
        // doubling all accuracies quarters the fitted noise variance
        let acc2: Vec<f64> = lc.accuracies().unwrap().iter().map(|s| 2.0 * s).collect();
        let lc2 = LightCurve::new(lc.times().to_vec(), lc.values().to_vec(), Some(acc2)).unwrap();
        let fit2 = fit_gpr(&lc2, 5.2, Family::GprWeighted, Objective::MarginalLikelihood, &FitConfig::default()).unwrap();
        assert!((fit2.hyperparams.noise_variance * 4.0 / fit.hyperparams.noise_variance - 1.0).abs() < 1e-6);
        assert!((fit2.hyperparams.amplitude / fit.hyperparams.amplitude - 1.0).abs() < 1e-6);
    }

    #[test]
    fn red_fit_on_white_data_keeps_rho_small() {
        let mut small = 0;
        for seed in 0..10 {
            let lc = gpr_curve(100 + seed, 80, 1.0);
            let fit = fit_gpr(&lc, 5.2, Family::GprRed, Objective::MarginalLikelihood, &FitConfig::default()).unwrap();
            if fit.hyperparams.rho <= 0.15 {
                small += 1;
            }
        }
        assert!(small >= 8, "{small}/10");
    }
}
