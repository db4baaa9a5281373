//! Wall-clock comparison of the p-value evaluators.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use sppgram_core::models::{fit_gpr, gpr_test_matrices, sinusoid_m1, Family, FitConfig, Objective, Statistic, TestMatrices};
use sppgram_core::simulate::{derive_seed, simulate, Noise, Sampling, SimScenario, Signal};
use sppgram_core::testing::{observed_statistic, p_value, Evaluator, PValueMethod};
use sppgram_core::{LightCurve, Result};

/// Replicates of the Monte-Carlo evaluator.
pub const MC_REPS: usize = 10_000;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimingRow {
    /// `gpr` or `ols`.
    pub model: String,
    pub method: PValueMethod,
    /// Total seconds over all repetitions.
    pub seconds: f64,
    /// Time relative to the saddlepoint path of the same model.
    pub ratio_to_saddlepoint: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimingTable {
    pub n: usize,
    pub reps: usize,
    pub rows: Vec<TimingRow>,
}

impl TimingTable {
    pub fn seconds(&self, model: &str, method: PValueMethod) -> Option<f64> {
        self.rows.iter().find(|r| r.model == model && r.method == method).map(|r| r.seconds)
    }
}

fn bench_curve(n: usize, seed: u64) -> Result<LightCurve> {
    simulate(&SimScenario {
        sampling: Sampling::Uniform { n, timespan: 100.0 },
        signal: Signal::GprPrior { amplitude: 1.0, period: 5.2, smoothness: 1.0 },
        noise: Noise::White { variance: 1.0 },
        accuracies: None,
        target_snr: Some(0.5),
        seed,
        signal_seed: None,
    })
}

fn time_method(y: &[f64], m: &TestMatrices, reps: usize, evaluator: impl Fn(usize) -> Evaluator) -> Result<f64> {
    let start = Instant::now();
    for r in 0..reps {
        let t = observed_statistic(y, m)?;
        std::hint::black_box(p_value(t, m, evaluator(r))?);
    }
    Ok(start.elapsed().as_secs_f64())
}

/// Times `reps` complete tests (observed statistic plus p-value) per
/// evaluator for a fitted GPR model and for sinusoid least squares at `n`
/// points. Model fitting is excluded.
pub fn timing_benchmark(n: usize, reps: usize, seed: u64) -> Result<TimingTable> {
    if n < 20 || reps == 0 {
        return Err(sppgram_core::Error::Domain("the benchmark needs n >= 20 and at least one repetition".into()));
    }
    let lc = bench_curve(n, seed)?;
    let fit = fit_gpr(&lc, 5.2, Family::Gpr, Objective::MarginalLikelihood, &FitConfig::default())?;
    let gpr = gpr_test_matrices(&lc, &fit.hyperparams, Family::Gpr, &[Statistic::F])?.f.expect("F matrices were requested");
    let ols = sinusoid_m1(lc.times(), 5.2, None)?;
    let mc = |r: usize| Evaluator::MonteCarlo { reps: MC_REPS, seed: derive_seed(seed, 1, r as u64) };

    let mut rows = Vec::new();
    for (model, m) in [("gpr", &gpr), ("ols", &ols)] {
        let mut methods = vec![
            (PValueMethod::Saddlepoint, time_method(lc.values(), m, reps, |_| Evaluator::Saddlepoint)?),
            (PValueMethod::Imhof, time_method(lc.values(), m, reps, |_| Evaluator::Imhof)?),
            (PValueMethod::MonteCarlo, time_method(lc.values(), m, reps, mc)?),
        ];
        if m.exact_f_valid {
            methods.push((PValueMethod::ExactF, time_method(lc.values(), m, reps, |_| Evaluator::ExactF)?));
        }
        let base = methods[0].1;
        rows.extend(methods.into_iter().map(|(method, seconds)| TimingRow {
            model: model.to_string(),
            method,
            seconds,
            ratio_to_saddlepoint: seconds / base,
        }));
    }
    Ok(TimingTable { n, reps, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_benchmark_runs() {
        let table = timing_benchmark(30, 2, 1).unwrap();
        assert_eq!(table.rows.len(), 7);
        assert!(table.seconds("ols", PValueMethod::ExactF).is_some());
        assert!(table.seconds("gpr", PValueMethod::ExactF).is_none());
        assert!(table.rows.iter().all(|r| r.seconds >= 0.0));
        assert!(timing_benchmark(10, 2, 1).is_err());
    }
}
