use rand_distr::{Distribution, StandardNormal};

use super::QuadFormSpec;
use crate::error::{bail, Result};
use crate::simulate::rng_for;

pub const MIN_MC_REPS: usize = 100;

/// Fraction of `reps` draws of `sum lambda_i Z_i^2` exceeding `x`.
pub fn mc_survival(spec: &QuadFormSpec, x: f64, reps: usize, seed: u64) -> Result<f64> {
    if reps < MIN_MC_REPS {
        bail!(Domain, "Monte Carlo needs at least {MIN_MC_REPS} replicates, got {reps}");
    }
    let mut rng = rng_for(seed, 0);
    let mut above = 0usize;
    for _ in 0..reps {
        let mut v = 0.0;
        for &l in &spec.lambdas {
            let z: f64 = StandardNormal.sample(&mut rng);
            v += l * z * z;
        }
        if v > x {
            above += 1;
        }
    }
    Ok(above as f64 / reps as f64)
}
