use alloc::vec::Vec;
use core::f64::consts::PI;

use num_traits::Float;

use super::{sandwich_diag, TestMatrices};
use crate::error::{bail, Result};
use crate::Matrix;

/// Matrices of the generalized F test with the sinusoid alternative
/// `b0 + b1 sin(2 pi t / p) + b2 cos(2 pi t / p)`.
///
/// Unweighted: `M1 = I - X (X'X)^-1 X'` and `M0 = I - 1 1' / n`, both
/// projections, so the exact F(2, n - 3) distribution applies. With weights
/// `q` the residuals are those of regressing `Q y` on `Q X`, and the null
/// model is the weighted mean.
pub fn sinusoid_m1(times: &[f64], period: f64, weights: Option<&[f64]>) -> Result<TestMatrices> {
    let n = times.len();
    if !(period.is_finite() && period > 0.0) {
        bail!(Domain, "period must be positive, got {period}");
    }
    if n < 4 {
        bail!(Domain, "the sinusoid test needs at least 4 points, got {n}");
    }
    if let Some(q) = weights {
        if q.len() != n || q.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            bail!(Validation, "weights must be {n} positive finite values");
        }
    }
    let q: Vec<f64> = weights.map_or_else(|| alloc::vec![1.0; n], <[f64]>::to_vec);
    let t0 = times[0];
    let x = Matrix::from_fn(n, 3, |j, c| {
        let arg = 2.0 * PI * (times[j] - t0) / period;
        q[j] * match c {
            0 => 1.0,
            1 => arg.sin(),
            _ => arg.cos(),
        }
    });
    let qr = x.qr();
    let r = qr.r();
    let rmax = (0..3).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if (0..3).any(|i| r[(i, i)].abs() <= 1e-10 * rmax) {
        bail!(Numerical, "sinusoid design matrix is rank deficient at period {period}");
    }
    let basis = qr.q();
    let mut resid = Matrix::identity(n, n);
    resid -= &basis * basis.transpose();

    let qq: f64 = q.iter().map(|v| v * v).sum();
    let mut null_resid = Matrix::identity(n, n);
    for k in 0..n {
        for j in 0..n {
            null_resid[(j, k)] -= q[j] * q[k] / qq;
        }
    }
    let center_weights = q.iter().map(|v| v * v / qq).collect();
    let dof = Some((2, n - 3));

    match weights {
        None => Ok(TestMatrices {
            m0: null_resid,
            m1: resid,
            null_m0: None,
            null_m1: None,
            exact_f_valid: true,
            dof,
            center_weights,
        }),
        Some(_) => Ok(TestMatrices {
            m0: sandwich_diag(&null_resid, &q),
            m1: sandwich_diag(&resid, &q),
            null_m0: Some(null_resid),
            null_m1: Some(resid),
            exact_f_valid: false,
            dof,
            center_weights,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::sym_eigenvalues;
    use alloc::vec;

    fn times(n: usize) -> Vec<f64> {
        (0..n).map(|i| i as f64 * 0.731 + (i as f64 * 1.7).sin()).collect()
    }

    #[test]
    fn projection_spectrum() {
        let m = sinusoid_m1(&times(20), 2.4, None).unwrap();
        let eig = sym_eigenvalues(&m.m1);
        let zeros = eig.iter().filter(|l| l.abs() < 1e-10).count();
        let ones = eig.iter().filter(|l| (*l - 1.0).abs() < 1e-10).count();
        assert_eq!((zeros, ones), (3, 17));
        assert!(m.exact_f_valid);
        assert_eq!(m.dof, Some((2, 17)));
    }

    #[test]
    fn equal_weights_give_unweighted_statistic() {
        let t = times(30);
        let y: Vec<f64> = t.iter().map(|t| (t * 0.9).sin() + 0.3 * (t * 5.1).cos()).collect();
        let stat = |m: &TestMatrices| {
            let yc = nalgebra::DVector::from_vec(m.center(&y));
            let a = (yc.transpose() * &m.m0 * &yc)[0];
            let b = (yc.transpose() * &m.m1 * &yc)[0];
            (a - b) / b
        };
        let plain = sinusoid_m1(&t, 3.3, None).unwrap();
        let weighted = sinusoid_m1(&t, 3.3, Some(&vec![2.5; 30])).unwrap();
        assert!(!weighted.exact_f_valid);
        assert!((stat(&plain) - stat(&weighted)).abs() < 1e-10);
    }

    #[test]
    fn rank_deficiency_is_reported() {
        // integer times and period 1: sin and cos columns are constant
        let t: Vec<f64> = (0..10).map(|i| i as f64).collect();
        assert!(sinusoid_m1(&t, 1.0, None).is_err());
        assert!(sinusoid_m1(&t, 0.0, None).is_err());
    }
}
