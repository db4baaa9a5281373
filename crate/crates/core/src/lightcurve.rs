//! Irregularly sampled light curves.

use alloc::vec::Vec;

use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{bail, Error, Result};

/// Magnitudes observed at irregular times (days), with optional one-sigma
/// measurement accuracies.
///
/// Times are strictly increasing and all vectors share one length `n >= 3`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLightCurve")]
pub struct LightCurve {
    times: Vec<f64>,
    values: Vec<f64>,
    accuracies: Option<Vec<f64>>,
}

#[derive(Deserialize)]
struct RawLightCurve {
    times: Vec<f64>,
    values: Vec<f64>,
    #[serde(default)]
    accuracies: Option<Vec<f64>>,
}

impl TryFrom<RawLightCurve> for LightCurve {
    type Error = Error;

    fn try_from(raw: RawLightCurve) -> Result<Self> {
        LightCurve::new(raw.times, raw.values, raw.accuracies)
    }
}

impl LightCurve {
    pub const MIN_POINTS: usize = 3;

    pub fn new(times: Vec<f64>, values: Vec<f64>, accuracies: Option<Vec<f64>>) -> Result<Self> {
        let n = times.len();
        if values.len() != n {
            bail!(Validation, "{} times but {} values", n, values.len());
        }
        if let Some(acc) = &accuracies {
            if acc.len() != n {
                bail!(Validation, "{} times but {} accuracies", n, acc.len());
            }
            if let Some(j) = acc.iter().position(|s| !(s.is_finite() && *s > 0.0)) {
                bail!(Validation, "accuracy at index {j} is not strictly positive ({})", acc[j]);
            }
        }
        if n < Self::MIN_POINTS {
            bail!(Validation, "light curve needs at least {} points, got {n}", Self::MIN_POINTS);
        }
        if let Some(j) = times.iter().zip(&values).position(|(t, y)| !(t.is_finite() && y.is_finite())) {
            bail!(Validation, "non-finite time or value at index {j}");
        }
        if let Some(j) = times.windows(2).position(|w| w[1] <= w[0]) {
            if times[j + 1] == times[j] {
                bail!(Validation, "duplicate time {} at indices {} and {}", times[j], j, j + 1);
            }
            bail!(Validation, "times not increasing at index {}", j + 1);
        }
        Ok(Self { times, values, accuracies })
    }

    /// Number of observations.
    pub fn n(&self) -> usize {
        self.times.len()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn accuracies(&self) -> Option<&[f64]> {
        self.accuracies.as_deref()
    }

    /// Regression weights `q_j = 1 / s_j`, when accuracies are present.
    pub fn weights(&self) -> Option<Vec<f64>> {
        self.accuracies.as_ref().map(|acc| acc.iter().map(|s| 1.0 / s).collect())
    }

    /// Observation span `t_n - t_1`.
    pub fn timespan(&self) -> f64 {
        self.times[self.n() - 1] - self.times[0]
    }

    /// Same sampling with new values (accuracies kept).
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.times.clone(), values, self.accuracies.clone())
    }

    pub fn fold(&self, period: f64) -> Result<PhasedCurve> {
        let phases = self.times.iter().map(|&t| phase(t, period)).collect::<Result<Vec<_>>>()?;
        Ok(PhasedCurve { phases, values: self.values.clone(), period })
    }

    /// Sample variance of the values divided by `noise_variance`.
    pub fn snr(&self, noise_variance: f64) -> Result<f64> {
        snr(&self.values, noise_variance)
    }
}

/// A light curve folded at a trial period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasedCurve {
    pub phases: Vec<f64>,
    pub values: Vec<f64>,
    pub period: f64,
}

/// Fractional part of `t / period`, in `[0, 1)`.
pub fn phase(t: f64, period: f64) -> Result<f64> {
    if !(period.is_finite() && period > 0.0) {
        bail!(Domain, "period must be positive, got {period}");
    }
    let x = t / period;
    let frac = x - x.floor();
    // floor can round a tiny negative fraction up to exactly 1.0
    Ok(if frac >= 1.0 { 0.0 } else { frac })
}

/// Unbiased sample variance (n - 1 denominator).
pub fn sample_variance(values: &[f64]) -> Result<f64> {
    let n = values.len();
    if n < 2 {
        bail!(Domain, "sample variance needs at least 2 values, got {n}");
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    Ok(values.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / (n - 1) as f64)
}

pub fn snr(values: &[f64], noise_variance: f64) -> Result<f64> {
    if !(noise_variance.is_finite() && noise_variance > 0.0) {
        bail!(Domain, "noise variance must be positive, got {noise_variance}");
    }
    Ok(sample_variance(values)? / noise_variance)
}
