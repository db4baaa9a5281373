use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::{cgf_unchecked, QuadFormSpec};
use crate::error::{bail, Result};
use crate::special::{log1pmx, norm_sf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SaddlepointMethod {
    /// Barndorff-Nielsen formula at the saddlepoint.
    Saddlepoint,
    /// All weights share a sign and `x` lies where the survival is exactly 0 or 1.
    ExactChisqLimit,
    /// `x` sits within a thousandth of a standard deviation of the mean,
    /// where the formula loses precision; the survival is interpolated
    /// linearly between the edges of that band.
    NearMeanFallback,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaddlepointSolution {
    pub s_hat: f64,
    pub w: f64,
    pub u: f64,
    pub survival: f64,
    pub method: SaddlepointMethod,
}

/// Half-width of the interpolation band around the mean, in standard
/// deviations. Rounding in `log(u / w) / w` grows like `1 / w^2`.
const NEAR_MEAN_BAND: f64 = 1e-3;

/// `P(X > x)` by the Barndorff-Nielsen saddlepoint approximation
/// `1 - Phi(w + log(u / w) / w)`.
pub fn saddlepoint_survival(spec: &QuadFormSpec, x: f64) -> Result<SaddlepointSolution> {
    if !x.is_finite() {
        bail!(Domain, "x must be finite, got {x}");
    }
    let limit = |survival| SaddlepointSolution { s_hat: 0.0, w: 0.0, u: 0.0, survival, method: SaddlepointMethod::ExactChisqLimit };
    let (neg, pos) = spec.extremes();
    match (neg, pos) {
        (None, None) => return Ok(limit(QuadFormSpec::degenerate_survival(x))),
        (None, Some(_)) if x <= 0.0 => return Ok(limit(1.0)),
        (Some(_), None) if x >= 0.0 => return Ok(limit(0.0)),
        _ => {}
    }

    let mean = spec.mean();
    let delta = NEAR_MEAN_BAND * spec.variance().sqrt();
    if (x - mean).abs() < delta {
        let lo = bn_survival(spec, mean - delta)?.survival;
        let hi = bn_survival(spec, mean + delta)?.survival;
        return Ok(SaddlepointSolution {
            s_hat: 0.0,
            w: 0.0,
            u: 0.0,
            survival: lo + (hi - lo) * (x - mean + delta) / (2.0 * delta),
            method: SaddlepointMethod::NearMeanFallback,
        });
    }
    bn_survival(spec, x)
}

fn bn_survival(spec: &QuadFormSpec, x: f64) -> Result<SaddlepointSolution> {
    let s = solve_saddlepoint(spec, x)?;
    let lambdas = &spec.lambdas;
    let c = cgf_unchecked(lambdas, s);
    // s x - K(s) = s (x - sum lambda) + 1/2 sum [log(1 - 2 s lambda) + 2 s lambda]
    let mut excess = s * (x - spec.mean());
    for &l in lambdas {
        excess += 0.5 * log1pmx(-2.0 * s * l);
    }
    let w = s.signum() * (2.0 * excess.max(0.0)).sqrt();
    let u = s * c.k2.sqrt();
    if w == 0.0 || !(u / w > 0.0) {
        bail!(Numerical, "saddlepoint too close to the origin (s = {s:e}) to apply the tail formula");
    }
    let z = w + (u / w).ln() / w;
    let survival = norm_sf(z).clamp(0.0, 1.0);
    Ok(SaddlepointSolution { s_hat: s, w, u, survival, method: SaddlepointMethod::Saddlepoint })
}

/// Root of `K'(s) = x` inside the CGF domain. `K'` increases strictly
/// from `-inf` (or 0) to `+inf` there, so the root is unique and lies on the
/// same side of zero as `x - E[X]`.
pub(crate) fn solve_saddlepoint(spec: &QuadFormSpec, x: f64) -> Result<f64> {
    let lambdas = &spec.lambdas;
    let (dom_lo, dom_hi) = spec.cgf_domain();
    let mean = spec.mean();
    let g = |s: f64| cgf_unchecked(lambdas, s);

    // Bracket [a, b] with K'(a) < x < K'(b).
    let (mut a, mut b) = if x > mean { (0.0, dom_hi) } else { (dom_lo, 0.0) };
    if a.is_infinite() {
        // all weights positive and 0 < x < mean: walk left until K'(a) < x
        let mut step = -1.0 / (2.0 * spec.extremes().1.unwrap_or(1.0));
        loop {
            if g(step).k1 < x {
                a = step;
                break;
            }
            step *= 2.0;
            if step < -1e300 {
                bail!(Numerical, "could not bracket the saddlepoint for x = {x}");
            }
        }
    }
    if b.is_infinite() {
        let mut step = -1.0 / (2.0 * spec.extremes().0.unwrap_or(-1.0));
        loop {
            if g(step).k1 > x {
                b = step;
                break;
            }
            step *= 2.0;
            if step > 1e300 {
                bail!(Numerical, "could not bracket the saddlepoint for x = {x}");
            }
        }
    }

    let mut s = 0.0f64.clamp(a, b);
    let tol = 1e-15;
    for _ in 0..500 {
        let c = g(s);
        let f = c.k1 - x;
        if f == 0.0 {
            return Ok(s);
        }
        if f < 0.0 {
            a = s;
        } else {
            b = s;
        }
        let newton = s - f / c.k2;
        let next = if newton > a && newton < b && newton.is_finite() { newton } else { 0.5 * (a + b) };
        // the bracket ends can be poles; keep iterates strictly inside
        let next = if next <= a || next >= b { a + 0.5 * (b - a) } else { next };
        if (next - s).abs() <= tol * s.abs().max(1e-300) || (b - a) <= tol * a.abs().max(b.abs()) {
            return Ok(next);
        }
        s = next;
    }
    bail!(Numerical, "saddlepoint root search did not converge for x = {x}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn sp(l: &[f64], x: f64) -> SaddlepointSolution {
        saddlepoint_survival(&QuadFormSpec::new(l.to_vec()).unwrap(), x).unwrap()
    }

    #[test]
    fn single_chi_square_tail() {
        let exact = ChiSquared::new(1.0).unwrap().sf(3.841459);
        let got = sp(&[1.0], 3.841459);
        assert_eq!(got.method, SaddlepointMethod::Saddlepoint);
        assert!((got.survival - exact).abs() < 2e-3, "{} vs {exact}", got.survival);
        assert!((got.survival - 0.05).abs() < 2e-3);
    }

    #[test]
    fn chi_square_family_against_reference() {
        for &df in &[2usize, 5, 30] {
            let dist = ChiSquared::new(df as f64).unwrap();
            for &q in &[0.3, 0.8, 0.95, 0.999] {
                let x = dist.inverse_cdf(q);
                let got = sp(&vec![1.0; df], x).survival;
                assert!((got - (1.0 - q)).abs() < 2e-3, "df={df} q={q}: {got}");
            }
        }
    }

    #[test]
    fn symmetric_distribution_at_zero() {
        let got = sp(&[1.0, -1.0], 0.0);
        assert_eq!(got.method, SaddlepointMethod::NearMeanFallback);
        assert!((got.survival - 0.5).abs() < 1e-12);
    }

    #[test]
    fn stable_across_the_mean() {
        let l = [0.05, 0.05, 0.05, -0.05, -0.74, -0.05];
        let mean: f64 = l.iter().sum();
        let sd = (2.0 * l.iter().map(|v| v * v).sum::<f64>()).sqrt();
        let at = |k: f64| sp(&l, mean + k * sd).survival;
        let centre = at(0.0);
        for k in [-2e-3, -1e-3, -1e-6, 1e-9, 1e-6, 1e-3, 2e-3] {
            assert!((at(k) - centre).abs() < 0.6 * k.abs() + 1e-9, "k={k}: {} vs {centre}", at(k));
        }
    }

    #[test]
    fn sign_limits() {
        assert_eq!(sp(&[1.0, 2.0], 0.0).survival, 1.0);
        assert_eq!(sp(&[1.0, 2.0], -3.0).survival, 1.0);
        assert_eq!(sp(&[-1.0, -2.0], 0.0).survival, 0.0);
        assert_eq!(sp(&[-1.0, -2.0], 0.0).method, SaddlepointMethod::ExactChisqLimit);
        let neg = sp(&[-1.0, -2.0], -4.0);
        assert!(neg.survival > 0.0 && neg.survival < 1.0);
        assert_eq!(sp(&[], 0.0).survival, 0.0);
        assert_eq!(sp(&[], -1.0).survival, 1.0);
    }

    #[test]
    fn root_lies_in_domain_and_solves_equation() {
        let spec = QuadFormSpec::new(vec![3.0, 1.0, 0.5, -0.2, -2.0, -0.01]).unwrap();
        let (lo, hi) = spec.cgf_domain();
        for &x in &[-20.0, -3.0, 0.0, 1.0, 8.0, 40.0] {
            let s = solve_saddlepoint(&spec, x).unwrap();
            assert!(s > lo && s < hi);
            let k1 = cgf_unchecked(&spec.lambdas, s).k1;
            assert!((k1 - x).abs() < 1e-9 * (1.0 + x.abs()), "x={x}: K'={k1}");
        }
    }

    #[test]
    fn root_is_unique_from_different_brackets() {
        // two independent bisections seeded from opposite ends converge to one root
        let spec = QuadFormSpec::new(vec![2.0, 0.7, -1.3, -0.4]).unwrap();
        let x = 0.0;
        let (lo, hi) = spec.cgf_domain();
        let bisect = |mut a: f64, mut b: f64| {
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if cgf_unchecked(&spec.lambdas, m).k1 < x {
                    a = m
                } else {
                    b = m
                }
            }
            0.5 * (a + b)
        };
        let r1 = bisect(lo + 1e-12, hi - 1e-12);
        let r2 = bisect(lo * 0.999_999, hi * 0.5 + 0.5 * hi * 0.999_999);
        let s = solve_saddlepoint(&spec, x).unwrap();
        assert!((r1 - r2).abs() < 1e-10);
        assert!((s - r1).abs() < 1e-10);
    }

    #[test]
    fn monotone_in_x() {
        let spec = QuadFormSpec::new(vec![1.0, 0.8, 0.3, -0.5, -0.1]).unwrap();
        let mut prev = 1.0;
        for i in 0..200 {
            let x = -6.0 + 0.07 * i as f64;
            let s = saddlepoint_survival(&spec, x).unwrap().survival;
            assert!(s <= prev + 1e-12, "x={x}: {s} > {prev}");
            prev = s;
        }
    }
}
