use crate::error::{bail, Result};
use crate::special::f_sf;

/// `P(F_gen > f)` for the projection case, where `f * d2 / d1` follows an
/// F(d1, d2) distribution with `d1 = m1 - m0` and `d2 = n - m1`.
pub fn exact_f_survival(f: f64, dof: (usize, usize)) -> Result<f64> {
    let (d1, d2) = dof;
    if d1 == 0 || d2 == 0 {
        bail!(Domain, "degrees of freedom must be positive, got ({d1}, {d2})");
    }
    if f.is_nan() || f < -1.0 {
        bail!(Domain, "generalized F statistic is bounded below by -1, got {f}");
    }
    let c = d2 as f64 / d1 as f64;
    Ok(f_sf(f * c, d1 as f64, d2 as f64))
}
