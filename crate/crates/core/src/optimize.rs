//! Derivative-free minimization: Nelder-Mead simplex search and a logistic
//! map that turns box constraints into an unconstrained problem.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadConfig {
    pub max_evals: usize,
    /// Stop when the spread of simplex values is below `f_tol * (1 + |f_best|)`
    /// and every vertex is within `x_tol` of the best one.
    pub f_tol: f64,
    pub x_tol: f64,
}

impl Default for NelderMeadConfig {
    fn default() -> Self {
        Self { max_evals: 400, f_tol: 1e-8, x_tol: 1e-4 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub converged: bool,
}

/// Minimizes `f` from `x0` with initial simplex edges `step`. NaN values
/// are treated as `+inf`, so the search backs away from invalid regions.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(mut f: F, x0: &[f64], step: &[f64], cfg: &NelderMeadConfig) -> Minimum {
    let d = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(d + 1);
    simplex.push(x0.to_vec());
    for i in 0..d {
        let mut x = x0.to_vec();
        x[i] += step[i];
        simplex.push(x);
    }
    let mut values: Vec<f64> = simplex.iter().map(|x| eval(x, &mut evals)).collect();

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut converged = false;
    let mut centroid = vec![0.0; d];
    let mut trial = vec![0.0; d];

    while evals < cfg.max_evals {
        let mut order: Vec<usize> = (0..=d).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let (best, worst) = (values[0], values[d]);
        let spread = worst - best;
        let diameter = simplex[1..]
            .iter()
            .flat_map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0f64, f64::max);
        if best.is_finite() && spread <= cfg.f_tol * (1.0 + best.abs()) && diameter <= cfg.x_tol {
            converged = true;
            break;
        }

        centroid.fill(0.0);
        for v in &simplex[..d] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / d as f64;
            }
        }
        let towards = |t: &mut Vec<f64>, coef: f64, from: &[f64]| {
            for ((ti, ci), wi) in t.iter_mut().zip(&centroid).zip(from) {
                *ti = ci + coef * (ci - wi);
            }
        };

        towards(&mut trial, alpha, &simplex[d]);
        let reflected = trial.clone();
        let fr = eval(&reflected, &mut evals);
        if fr < values[0] {
            towards(&mut trial, gamma, &simplex[d]);
            let fe = eval(&trial, &mut evals);
            if fe < fr {
                simplex[d] = trial.clone();
                values[d] = fe;
            } else {
                simplex[d] = reflected;
                values[d] = fr;
            }
            continue;
        }
        if fr < values[d - 1] {
            simplex[d] = reflected;
            values[d] = fr;
            continue;
        }
        // contraction, outside if the reflection improved on the worst point
        let (coef, target) = if fr < values[d] { (rho, fr) } else { (-rho, values[d]) };
        towards(&mut trial, coef, &simplex[d]);
        let fc = eval(&trial, &mut evals);
        if fc < target {
            simplex[d] = trial.clone();
            values[d] = fc;
            continue;
        }
        let best_x = simplex[0].clone();
        for i in 1..=d {
            for (x, b) in simplex[i].iter_mut().zip(&best_x) {
                *x = b + sigma * (*x - b);
            }
            values[i] = eval(&simplex[i], &mut evals);
        }
    }

    let (i_best, _) = values.iter().enumerate().fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
    Minimum { x: simplex[i_best].clone(), f: values[i_best], evals, converged }
}

/// Maps the real line onto `(lo, hi)` with a logistic curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounded {
    pub lo: f64,
    pub hi: f64,
}

impl Bounded {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn to_bounded(&self, u: f64) -> f64 {
        self.lo + (self.hi - self.lo) / (1.0 + (-u).exp())
    }

    /// Inverse of [`Self::to_bounded`]; values are first pulled a hair inside the box.
    pub fn to_free(&self, x: f64) -> f64 {
        let eps = 1e-9 * (self.hi - self.lo);
        let x = x.clamp(self.lo + eps, self.hi - eps);
        ((x - self.lo) / (self.hi - x)).ln()
    }
}
