use core::f64::consts::PI;

use num_traits::Float;

use super::QuadFormSpec;
use crate::error::{bail, Result};

/// Quadrature settings for [`imhof_survival`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImhofConfig {
    /// Integration stops where `1 / (v prod (1 + lambda^2 u^2)^(1/4))`, with
    /// `v = u max |lambda|`, drops below this.
    pub envelope_cutoff: f64,
    /// Absolute error allowed per panel.
    pub panel_tol: f64,
    pub max_depth: u32,
    /// Cap on integrand evaluations before reporting non-convergence.
    pub max_evals: usize,
}

impl Default for ImhofConfig {
    fn default() -> Self {
        Self { envelope_cutoff: 1e-9, panel_tol: 1e-12, max_depth: 30, max_evals: 50_000_000 }
    }
}

/// `P(X > x) = 1/2 + (1/pi) int_0^inf sin(theta(u)) / (u rho(u)) du` with
/// `theta(u) = 1/2 sum atan(lambda_i u) - x u / 2` and
/// `rho(u) = prod (1 + lambda_i^2 u^2)^(1/4)`.
pub fn imhof_survival(spec: &QuadFormSpec, x: f64) -> Result<f64> {
    imhof_survival_with(spec, x, &ImhofConfig::default())
}

pub fn imhof_survival_with(spec: &QuadFormSpec, x: f64, cfg: &ImhofConfig) -> Result<f64> {
    if !x.is_finite() {
        bail!(Domain, "x must be finite, got {x}");
    }
    let lambdas = &spec.lambdas;
    if lambdas.is_empty() {
        return Ok(QuadFormSpec::degenerate_survival(x));
    }
    let upper = truncation_point(lambdas, cfg.envelope_cutoff);
    let f = |u: f64| integrand(lambdas, x, u);
    let abs_sum = spec.abs_sum();

    let mut evals = 0usize;
    let mut total = 0.0;
    let mut a = 0.0;
    while a < upper {
        // |theta'| on [a, inf) is bounded by (|x| + sum |l| / (1 + l^2 a^2)) / 2;
        // panels cover at most half a turn of theta.
        let rate = 0.5 * (x.abs() + lambdas.iter().map(|l| l.abs() / (1.0 + l * l * a * a)).sum::<f64>());
        let width = if rate > 0.0 { PI / rate } else { upper };
        let width = width.min(upper - a).max(1e-12 / abs_sum.max(1e-300));
        let b = (a + width).min(upper);
        total += adaptive(&f, a, b, cfg.panel_tol, cfg.max_depth, &mut evals);
        if evals > cfg.max_evals {
            bail!(Numerical, "Imhof quadrature exceeded {} evaluations", cfg.max_evals);
        }
        a = b;
    }
    let p = 0.5 + total / PI;
    if !p.is_finite() {
        bail!(Numerical, "Imhof quadrature produced a non-finite value");
    }
    Ok(p.clamp(0.0, 1.0))
}

fn integrand(lambdas: &[f64], x: f64, u: f64) -> f64 {
    let mut theta = -0.5 * x * u;
    let mut ln_rho = 0.0;
    for &l in lambdas {
        let lu = l * u;
        theta += 0.5 * lu.atan();
        ln_rho += 0.25 * libm::log1p(lu * lu);
    }
    theta.sin() / (u * ln_rho.exp())
}

/// Log envelope with `u` measured in units of `1 / max |lambda|`, so the
/// truncation point scales with the weights.
fn ln_envelope(lambdas: &[f64], max: f64, u: f64) -> f64 {
    -(u * max).ln() - 0.25 * lambdas.iter().map(|l| libm::log1p(l * l * u * u)).sum::<f64>()
}

fn truncation_point(lambdas: &[f64], cutoff: f64) -> f64 {
    let target = cutoff.ln();
    let max = lambdas.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    let ln_envelope = |u: f64| ln_envelope(lambdas, max, u);
    let mut u = 1.0 / max;
    while ln_envelope(u) > target {
        u *= 2.0;
    }
    // bisect back down to the crossing
    let (mut lo, mut hi) = (0.5 * u, u);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if ln_envelope(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

// 7-point Gauss / 15-point Kronrod nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32, evals: &mut usize) -> f64 {
    let (val, err) = gauss_kronrod(f, a, b);
    *evals += 15;
    if err <= tol || depth == 0 {
        return val;
    }
    let m = 0.5 * (a + b);
    adaptive(f, a, m, 0.5 * tol, depth - 1, evals) + adaptive(f, m, b, 0.5 * tol, depth - 1, evals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn imhof(l: &[f64], x: f64) -> f64 {
        imhof_survival(&QuadFormSpec::new(l.to_vec()).unwrap(), x).unwrap()
    }

    #[test]
    fn single_chi_square_tail() {
        let got = imhof(&[1.0], 3.841459);
        assert!((got - 0.05).abs() < 1e-5, "{got}");
    }

    #[test]
    fn chi_square_family_against_reference() {
        for &df in &[2usize, 7, 40] {
            let dist = ChiSquared::new(df as f64).unwrap();
            for &q in &[0.05, 0.5, 0.99] {
                let x = dist.inverse_cdf(q);
                let got = imhof(&vec![1.0; df], x);
                assert!((got - (1.0 - q)).abs() < 1e-6, "df={df} q={q}: {got}");
            }
        }
    }

    #[test]
    fn symmetric_distribution_at_zero() {
        assert!((imhof(&[1.0, -1.0], 0.0) - 0.5).abs() < 1e-6);
    }

    #[test]
    fn two_point_mixture_closed_form() {
        // lambda = {1, 1}: chi-square(2) scaled, P(X > x) = exp(-x / 2)
        for &x in &[0.3, 2.0, 9.0] {
            assert!((imhof(&[1.0, 1.0], x) - (-x / 2.0f64).exp()).abs() < 1e-7);
        }
    }

    #[test]
    fn scale_equivariance() {
        let l = [0.9, 0.4, -0.7, -0.05, 1.3];
        let spec = QuadFormSpec::new(l.to_vec()).unwrap();
        for &x in &[-1.0, 0.0, 0.5, 2.5] {
            let base = imhof_survival(&spec, x).unwrap();
            let scaled = imhof_survival(&spec.scaled(7.5), 7.5 * x).unwrap();
            assert!((base - scaled).abs() < 1e-7);
        }
    }
}
