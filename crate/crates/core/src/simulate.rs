//! Synthetic light curves for power studies and tests.
//!
//! All randomness comes from ChaCha8 (`rand_chacha` 0.9) seeded with
//! `seed_from_u64`. Each ingredient of a scenario draws from its own stream
//! of the same seed, so changing, say, the noise model leaves the sampling
//! and the signal untouched:
//!
//! | stream | use |
//! |--------|-----|
//! | 1 | random sampling times |
//! | 2 | signal (or stream 2 of `signal_seed` when set) |
//! | 3 | measurement accuracies |
//! | 4 | noise |

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::covariance::{cholesky, periodic_kernel, red_noise_corr, KernelParams};
use crate::error::{bail, Result};
use crate::lightcurve::{sample_variance, LightCurve};

const STREAM_SAMPLING: u64 = 1;
const STREAM_SIGNAL: u64 = 2;
const STREAM_ACCURACY: u64 = 3;
const STREAM_NOISE: u64 = 4;

const MAX_PER_NIGHT: usize = 8;

/// Generator for `(seed, stream)`.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Mixes a base seed with two indices (splitmix64 finalizer), giving
/// disjoint per-replicate seeds.
pub fn derive_seed(base: u64, a: u64, b: u64) -> u64 {
    let mut z = base ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    Times(Vec<f64>),
    /// `n` uniform random times on `[0, timespan]`.
    Uniform { n: usize, timespan: f64 },
    /// Ground-based survey cadence: each of `nights` consecutive nights is
    /// observed with probability `night_probability`, with 1 to
    /// `max_per_night` exposures a few tens of minutes apart.
    Nightly { nights: usize, night_probability: f64, max_per_night: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Signal {
    /// `intercept + b1 sin(2 pi t / p) + b2 cos(2 pi t / p)`; without explicit
    /// coefficients the amplitude is split evenly, `b1 = b2 = amplitude / sqrt 2`.
    Sine {
        period: f64,
        amplitude: f64,
        #[serde(default)]
        intercept: f64,
        #[serde(default)]
        coefficients: Option<(f64, f64)>,
    },
    /// A draw from the zero-mean periodic-kernel Gaussian process prior.
    GprPrior { amplitude: f64, period: f64, smoothness: f64 },
    Constant { value: f64 },
}

impl Signal {
    pub fn period(&self) -> Option<f64> {
        match self {
            Signal::Sine { period, .. } | Signal::GprPrior { period, .. } => Some(*period),
            Signal::Constant { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Noise {
    White { variance: f64 },
    /// Correlation `rho^|t_j - t_k|` with marginal variance `variance`.
    Red { rho: f64, variance: f64 },
}

impl Noise {
    pub fn variance(&self) -> f64 {
        match *self {
            Noise::White { variance } | Noise::Red { variance, .. } => variance,
        }
    }

    fn with_variance(self, variance: f64) -> Self {
        match self {
            Noise::White { .. } => Noise::White { variance },
            Noise::Red { rho, .. } => Noise::Red { rho, variance },
        }
    }
}

/// Heteroscedastic white noise: relative accuracies drawn uniformly from
/// `[min, max]` and rescaled to unit root-mean-square.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracyRange {
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimScenario {
    pub sampling: Sampling,
    pub signal: Signal,
    pub noise: Noise,
    #[serde(default)]
    pub accuracies: Option<AccuracyRange>,
    /// When set, the noise variance becomes `var(signal) / target_snr`.
    #[serde(default)]
    pub target_snr: Option<f64>,
    pub seed: u64,
    /// Fixes the signal draw independently of `seed`.
    #[serde(default)]
    pub signal_seed: Option<u64>,
}

impl SimScenario {
    pub fn validate(&self) -> Result<()> {
        match &self.sampling {
            Sampling::Times(t) if t.len() < LightCurve::MIN_POINTS => {
                bail!(Validation, "sampling needs at least {} times", LightCurve::MIN_POINTS)
            }
            Sampling::Uniform { n, timespan } if *n < LightCurve::MIN_POINTS || !(*timespan > 0.0) => {
                bail!(Validation, "uniform sampling needs n >= {} and a positive timespan", LightCurve::MIN_POINTS)
            }
            Sampling::Nightly { nights, night_probability, max_per_night }
                if (*nights == 0 || !(*night_probability > 0.0 && *night_probability <= 1.0) || !(1..=MAX_PER_NIGHT).contains(max_per_night)) => {
                    bail!(Validation, "nightly sampling needs nights >= 1, probability in (0, 1] and 1 to {MAX_PER_NIGHT} exposures per night")
                }
            _ => {}
        }
        match self.signal {
            Signal::Sine { period, amplitude, .. } if !(period > 0.0 && amplitude.is_finite()) => {
                bail!(Validation, "sine signal needs a positive period and finite amplitude")
            }
            Signal::GprPrior { amplitude, period, smoothness } => {
                KernelParams { amplitude, period, smoothness, noise_variance: 1.0, rho: 0.0 }.validate()?
            }
            _ => {}
        }
        let var = self.noise.variance();
        if !(var.is_finite() && var >= 0.0) {
            bail!(Validation, "noise variance must be non-negative, got {var}");
        }
        if let Noise::Red { rho, .. } = self.noise {
            if !(0.0..1.0).contains(&rho) {
                bail!(Validation, "simulated red noise needs rho in [0, 1), got {rho}");
            }
        }
        if let Some(acc) = self.accuracies {
            if !(acc.min > 0.0 && acc.max >= acc.min) {
                bail!(Validation, "accuracy range must satisfy 0 < min <= max");
            }
            if matches!(self.noise, Noise::Red { .. }) {
                bail!(Validation, "accuracies are only supported with white noise");
            }
        }
        if let Some(snr) = self.target_snr {
            if !(snr.is_finite() && snr > 0.0) {
                bail!(Validation, "target SNR must be positive, got {snr}");
            }
        }
        Ok(())
    }
}

/// Realizes a scenario: sampling, signal and noise, deterministic per seed.
pub fn simulate(scenario: &SimScenario) -> Result<LightCurve> {
    scenario.validate()?;
    let times = sampling_times(&scenario.sampling, scenario.seed)?;
    let signal = signal_values(&scenario.signal, &times, scenario.signal_seed.unwrap_or(scenario.seed))?;
    let noise = noise_values(scenario, &times, &signal)?;
    let values = signal.iter().zip(&noise.values).map(|(s, e)| s + e).collect();
    LightCurve::new(times, values, noise.accuracies)
}

pub fn sampling_times(sampling: &Sampling, seed: u64) -> Result<Vec<f64>> {
    Ok(match sampling {
        Sampling::Times(t) => t.clone(),
        Sampling::Uniform { n, timespan } => {
            let mut rng = rng_for(seed, STREAM_SAMPLING);
            let mut t: Vec<f64> = (0..*n).map(|_| rng.random::<f64>() * timespan).collect();
            t.sort_by(f64::total_cmp);
            t
        }
        Sampling::Nightly { nights, night_probability, max_per_night } => {
            let mut rng = rng_for(seed, STREAM_SAMPLING);
            let mut t = Vec::new();
            for night in 0..*nights {
                if rng.random::<f64>() >= *night_probability {
                    continue;
                }
                let count = 1 + ((rng.random::<f64>() * *max_per_night as f64) as usize).min(max_per_night - 1);
                let mut x = night as f64 + 0.05 + 0.1 * rng.random::<f64>();
                for _ in 0..count {
                    t.push(x);
                    x += 0.02 + 0.08 * rng.random::<f64>();
                }
            }
            t
        }
    })
}

/// Noiseless signal at the given times.
pub fn signal_values(signal: &Signal, times: &[f64], seed: u64) -> Result<Vec<f64>> {
    Ok(match *signal {
        Signal::Sine { period, amplitude, intercept, coefficients } => {
            let (b1, b2) = coefficients.unwrap_or((amplitude / 2f64.sqrt(), amplitude / 2f64.sqrt()));
            times
                .iter()
                .map(|&t| {
                    let arg = 2.0 * PI * t / period;
                    intercept + b1 * arg.sin() + b2 * arg.cos()
                })
                .collect()
        }
        Signal::GprPrior { amplitude, period, smoothness } => {
            let params = KernelParams { amplitude, period, smoothness, noise_variance: 1.0, rho: 0.0 };
            gpr_prior_draw(times, &params, seed)?
        }
        Signal::Constant { value } => vec![value; times.len()],
    })
}

struct NoiseDraw {
    values: Vec<f64>,
    accuracies: Option<Vec<f64>>,
}

fn noise_values(scenario: &SimScenario, times: &[f64], signal: &[f64]) -> Result<NoiseDraw> {
    let n = times.len();
    let noise = match scenario.target_snr {
        Some(snr) => {
            let var = if n >= 2 { sample_variance(signal)? } else { 0.0 };
            if !(var > 0.0) {
                bail!(Domain, "target SNR needs a signal with positive variance");
            }
            scenario.noise.with_variance(var / snr)
        }
        None => scenario.noise,
    };
    let mut rng = rng_for(scenario.seed, STREAM_NOISE);
    let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    match noise {
        Noise::White { variance } => {
            let sigma = variance.sqrt();
            match scenario.accuracies {
                None => Ok(NoiseDraw { values: z.iter().map(|z| sigma * z).collect(), accuracies: None }),
                Some(range) => {
                    let mut acc_rng = rng_for(scenario.seed, STREAM_ACCURACY);
                    let rel: Vec<f64> = (0..n).map(|_| range.min + (range.max - range.min) * acc_rng.random::<f64>()).collect();
                    let rms = (rel.iter().map(|r| r * r).sum::<f64>() / n as f64).sqrt();
                    let sd: Vec<f64> = rel.iter().map(|r| sigma * r / rms).collect();
                    if sd.iter().any(|s| !(*s > 0.0)) {
                        bail!(Domain, "accuracies need a positive noise variance");
                    }
                    Ok(NoiseDraw { values: sd.iter().zip(&z).map(|(s, z)| s * z).collect(), accuracies: Some(sd) })
                }
            }
        }
        Noise::Red { rho, variance } => {
            if variance == 0.0 {
                return Ok(NoiseDraw { values: vec![0.0; n], accuracies: None });
            }
            let mut cov = red_noise_corr(times, rho)?.matrix;
            cov *= variance;
            let l = cholesky(&cov)?.l;
            let zv = nalgebra::DVector::from_vec(z);
            Ok(NoiseDraw { values: (l * zv).as_slice().to_vec(), accuracies: None })
        }
    }
}

/// One draw `L z` from `N(0, K)`, `K` the periodic kernel and `L` its
/// (jittered) Cholesky factor.
pub fn gpr_prior_draw(times: &[f64], params: &KernelParams, seed: u64) -> Result<Vec<f64>> {
    params.validate()?;
    let n = times.len();
    if params.amplitude == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let k = periodic_kernel(times, params.amplitude, params.period, params.smoothness)?.matrix;
    let l = cholesky(&k)?.l;
    let mut rng = rng_for(seed, STREAM_SIGNAL);
    let z = nalgebra::DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
    Ok((l * z).as_slice().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lightcurve::phase;

    fn sine_scenario(noise: Noise) -> SimScenario {
        SimScenario {
            sampling: Sampling::Uniform { n: 200, timespan: 100.0 },
            signal: Signal::Sine { period: 2.4, amplitude: 1.5, intercept: 10.0, coefficients: None },
            noise,
            accuracies: None,
            target_snr: None,
            seed: 42,
            signal_seed: None,
        }
    }

    #[test]
    fn nightly_sampling_clusters_within_nights() {
        let sampling = Sampling::Nightly { nights: 200, night_probability: 0.4, max_per_night: 3 };
        let t = sampling_times(&sampling, 8).unwrap();
        assert_eq!(t, sampling_times(&sampling, 8).unwrap());
        assert!(t.windows(2).all(|w| w[1] > w[0]));
        assert!(t.iter().all(|x| x.fract() > 0.0 && x.fract() < 0.5 && *x < 200.0));
        let nights = {
            let mut d: Vec<i64> = t.iter().map(|x| x.floor() as i64).collect();
            d.dedup();
            d.len()
        };
        // about 80 nights with 2 exposures each on average
        assert!((60..=100).contains(&nights), "{nights}");
        assert!(t.len() > nights && t.len() <= 3 * nights);
        let bad = SimScenario {
            sampling: Sampling::Nightly { nights: 10, night_probability: 0.5, max_per_night: 20 },
            signal: Signal::Constant { value: 0.0 },
            noise: Noise::White { variance: 1.0 },
            accuracies: None,
            target_snr: None,
            seed: 0,
            signal_seed: None,
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn noiseless_sine_matches_model() {
        let lc = simulate(&sine_scenario(Noise::White { variance: 0.0 })).unwrap();
        let b = 1.5 / 2f64.sqrt();
        for (&t, &y) in lc.times().iter().zip(lc.values()) {
            let arg = 2.0 * PI * t / 2.4;
            assert!((y - (10.0 + b * arg.sin() + b * arg.cos())).abs() < 1e-12);
        }
    }

    #[test]
    fn reproducible_per_seed() {
        let s = sine_scenario(Noise::White { variance: 1.0 });
        assert_eq!(simulate(&s).unwrap(), simulate(&s).unwrap());
        let mut other = s.clone();
        other.seed = 43;
        assert_ne!(simulate(&s).unwrap().values(), simulate(&other).unwrap().values());
    }

    #[test]
    fn target_snr_rescales_noise() {
        // SNR of each realization is var(signal) / sigma^2 by construction;
        // the empirical ratio var(signal) / var(noise) averages to the target.
        let mut ratio_sum = 0.0;
        let reps = 1000;
        for rep in 0..reps {
            let mut s = sine_scenario(Noise::White { variance: 1.0 });
            s.target_snr = Some(3.0);
            s.seed = rep;
            let lc = simulate(&s).unwrap();
            let signal = signal_values(&s.signal, lc.times(), s.seed).unwrap();
            let noise: Vec<f64> = lc.values().iter().zip(&signal).map(|(y, g)| y - g).collect();
            ratio_sum += sample_variance(&signal).unwrap() / sample_variance(&noise).unwrap();
        }
        let mean_ratio = ratio_sum / reps as f64;
        // E[1 / chi2_199 / 199] is slightly above 1; stay within 5 %
        assert!((mean_ratio / 3.0 - 1.0).abs() < 0.05, "mean ratio {mean_ratio}");
    }

    #[test]
    fn red_noise_with_zero_rho_is_white() {
        let times: Vec<f64> = (0..6).map(|i| i as f64 * 0.7).collect();
        let reps = 20_000;
        let mut cov = [[0.0; 6]; 6];
        for rep in 0..reps {
            let s = SimScenario {
                sampling: Sampling::Times(times.clone()),
                signal: Signal::Constant { value: 0.0 },
                noise: Noise::Red { rho: 0.0, variance: 2.0 },
                accuracies: None,
                target_snr: None,
                seed: rep,
                signal_seed: None,
            };
            let y = simulate(&s).unwrap();
            for j in 0..6 {
                for k in 0..6 {
                    cov[j][k] += y.values()[j] * y.values()[k] / reps as f64;
                }
            }
        }
        // standard error of a covariance estimate is about sigma^2 sqrt(2 / reps)
        let se = 2.0 * (2.0 / reps as f64).sqrt();
        for j in 0..6 {
            for k in 0..6 {
                let want = if j == k { 2.0 } else { 0.0 };
                assert!((cov[j][k] - want).abs() < 5.0 * se, "({j},{k}) {}", cov[j][k]);
            }
        }
    }

    #[test]
    fn red_noise_lag_correlation() {
        // pairs one day apart, pairs 0.5 day apart
        let times = vec![0.0, 0.5, 1.0, 10.0, 10.5, 11.0];
        let rho = 0.6;
        let reps = 20_000u64;
        let (mut c05, mut c1, mut v) = (0.0, 0.0, 0.0);
        for rep in 0..reps {
            let s = SimScenario {
                sampling: Sampling::Times(times.clone()),
                signal: Signal::Constant { value: 0.0 },
                noise: Noise::Red { rho, variance: 1.0 },
                accuracies: None,
                target_snr: None,
                seed: rep,
                signal_seed: None,
            };
            let y = simulate(&s).unwrap();
            let y = y.values();
            c05 += y[0] * y[1] + y[3] * y[4];
            c1 += y[0] * y[2] + y[3] * y[5];
            v += y[0] * y[0] + y[3] * y[3];
        }
        let (r05, r1) = (c05 / v, c1 / v);
        // se of a correlation estimate ~ (1 - r^2) / sqrt(N) with N = 2 reps pairs
        let se = |r: f64| (1.0 - r * r) / (2.0 * reps as f64).sqrt();
        assert!((r05 - rho.powf(0.5)).abs() < 3.0 * se(rho.powf(0.5)) + 1e-3, "{r05}");
        assert!((r1 - rho).abs() < 3.0 * se(rho) + 1e-3, "{r1}");
    }

    #[test]
    fn gpr_prior_draw_examples() {
        let p = KernelParams { amplitude: 0.0, period: 5.1, smoothness: 1.0, noise_variance: 1.0, rho: 0.0 };
        assert_eq!(gpr_prior_draw(&[0.0, 1.0, 2.0], &p, 1).unwrap(), vec![0.0; 3]);

        // single point: N(0, A)
        let p = KernelParams { amplitude: 2.5, ..p };
        let reps = 10_000u64;
        let var = (0..reps).map(|s| gpr_prior_draw(&[3.0], &p, s).unwrap()[0].powi(2)).sum::<f64>() / reps as f64;
        assert!((var / 2.5 - 1.0).abs() < 0.05, "variance {var}");

        // points one period apart are perfectly correlated under the prior
        let draw = gpr_prior_draw(&[0.3, 0.3 + 5.1, 2.0], &KernelParams { smoothness: 20.0, ..p }, 9).unwrap();
        assert!((draw[0] - draw[1]).abs() < 1e-3 * draw[0].abs().max(1.0));
    }

    #[test]
    fn gpr_prior_signal_is_periodic() {
        // Phase dispersion: mean squared difference between phase-adjacent
        // points is small when folding at the generating period.
        let period = 5.1;
        let dispersion = |times: &[f64], values: &[f64], p: f64| {
            let mut pairs: Vec<(f64, f64)> = times.iter().map(|&t| phase(t, p).unwrap()).zip(values.iter().copied()).collect();
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            pairs.windows(2).map(|w| (w[1].1 - w[0].1).powi(2)).sum::<f64>() / (pairs.len() - 1) as f64
        };
        let s = SimScenario {
            sampling: Sampling::Uniform { n: 150, timespan: 120.0 },
            signal: Signal::GprPrior { amplitude: 1.0, period, smoothness: 0.8 },
            noise: Noise::White { variance: 0.0 },
            accuracies: None,
            target_snr: None,
            seed: 0,
            signal_seed: None,
        };
        let mut wins = 0;
        for rep in 0..20 {
            let lc = simulate(&SimScenario { seed: rep, ..s.clone() }).unwrap();
            let at_true = dispersion(lc.times(), lc.values(), period);
            let others = [3.7, 4.6, 6.3, 7.9].iter().map(|&p| dispersion(lc.times(), lc.values(), p)).fold(f64::INFINITY, f64::min);
            if at_true < 0.1 * others {
                wins += 1;
            }
        }
        assert_eq!(wins, 20);
    }

    #[test]
    fn validation() {
        let mut s = sine_scenario(Noise::White { variance: 1.0 });
        s.target_snr = Some(-1.0);
        assert!(simulate(&s).is_err());
        let mut s = sine_scenario(Noise::Red { rho: 1.2, variance: 1.0 });
        s.seed = 1;
        assert!(simulate(&s).is_err());
        let mut s = sine_scenario(Noise::White { variance: 1.0 });
        s.signal = Signal::Constant { value: 3.0 };
        s.target_snr = Some(2.0);
        assert!(simulate(&s).is_err());
    }
}
