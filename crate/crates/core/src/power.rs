//! Monte-Carlo power studies and the red versus white noise comparison.
//!
//! A replicate counts as a detection at level `L` when the grid point
//! nearest the true period has a p-value below `1 - L`. With a period grid
//! the harness also records whether the largest statistic sits at that grid
//! point ("correct peak") and how many other grid points are significant
//! ("false periods").

use alloc::vec::Vec;

use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{bail, Result};
use crate::exec::{Executor, Sequential};
use crate::models::{prepare, ModelSpec, Statistic};
use crate::periodogram::{scan_statistics, PeriodGrid, ScanConfig};
use crate::simulate::{derive_seed, simulate, Noise, Sampling, SimScenario, Signal};
use crate::testing::{run_test, sidak_level, Evaluator};

pub const MIN_REPS: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerStudy {
    /// Template; its seed is replaced per replicate and its noise variance
    /// is set from each SNR.
    pub scenario: SimScenario,
    pub snr_grid: Vec<f64>,
    /// Per-test confidence levels `1 - alpha`.
    pub levels: Vec<f64>,
    pub reps: usize,
    pub methods: Vec<ModelSpec>,
    /// Trial periods; without a grid only the true period is tested.
    #[serde(default)]
    pub grid: Option<PeriodGrid>,
    #[serde(default)]
    pub evaluator: Evaluator,
    pub seed: u64,
}

impl PowerStudy {
    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        if self.reps < MIN_REPS {
            bail!(Validation, "a power study needs at least {MIN_REPS} replicates, got {}", self.reps);
        }
        if self.snr_grid.is_empty() || self.snr_grid.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            bail!(Validation, "the SNR grid must be a nonempty list of positive values");
        }
        if self.levels.is_empty() || self.levels.iter().any(|l| !(*l > 0.0 && *l < 1.0)) {
            bail!(Validation, "levels must lie in (0, 1)");
        }
        if self.methods.is_empty() {
            bail!(Validation, "a power study needs at least one method");
        }
        if self.scenario.signal.period().is_none() {
            bail!(Validation, "the scenario signal has no true period");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerRow {
    pub method: ModelSpec,
    pub snr: f64,
    pub level: f64,
    pub power: f64,
    /// Binomial standard error `sqrt(power (1 - power) / reps)`.
    pub se: f64,
    /// Mean number of significant grid points other than the true one.
    pub mean_false_periods: Option<f64>,
    /// Fraction of replicates whose largest statistic is at the true period.
    pub correct_peak_rate: Option<f64>,
    /// Replicates that completed; failures are excluded from the rates.
    pub reps: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerReport {
    pub rows: Vec<PowerRow>,
}

impl PowerReport {
    pub fn row(&self, method: &ModelSpec, snr: f64, level: f64) -> Option<&PowerRow> {
        self.rows.iter().find(|r| r.method == *method && r.snr == snr && r.level == level)
    }
}

/// Test outcome of one method on one replicate.
#[derive(Debug, Clone)]
struct Outcome {
    true_p: f64,
    /// P-values at every other grid point.
    other_p: Vec<f64>,
    correct_peak: Option<bool>,
}

/// Methods that differ only in their statistic share one fit.
fn group_methods(methods: &[ModelSpec]) -> Vec<(ModelSpec, Vec<(usize, Statistic)>)> {
    let mut groups: Vec<(ModelSpec, Vec<(usize, Statistic)>)> = Vec::new();
    for (k, m) in methods.iter().enumerate() {
        let key = ModelSpec { statistic: Statistic::F, ..*m };
        match groups.iter_mut().find(|(g, _)| *g == key) {
            Some((_, members)) => members.push((k, m.statistic)),
            None => groups.push((key, alloc::vec![(k, m.statistic)])),
        }
    }
    groups
}

fn run_replicate(
    scenario: &SimScenario,
    true_period: f64,
    methods: &[ModelSpec],
    grid: Option<&PeriodGrid>,
    evaluator: Evaluator,
) -> Vec<Option<Outcome>> {
    let mut out: Vec<Option<Outcome>> = alloc::vec![None; methods.len()];
    let Ok(lc) = simulate(scenario) else {
        return out;
    };
    for (spec, members) in group_methods(methods) {
        let stats: Vec<Statistic> = members.iter().map(|m| m.1).collect();
        match grid {
            None => {
                let Ok(prepared) = prepare(&lc, true_period, &spec, &stats) else { continue };
                for ((k, _), (_, mats)) in members.iter().zip(&prepared.matrices) {
                    if let Ok(r) = run_test(lc.values(), mats, evaluator, 0.05, &[]) {
                        out[*k] = Some(Outcome { true_p: r.p_value, other_p: Vec::new(), correct_peak: None });
                    }
                }
            }
            Some(grid) => {
                let cfg = ScanConfig { evaluator, ..ScanConfig::default() };
                let Ok(pgs) = scan_statistics(&lc, grid, &spec, &stats, &cfg, &Sequential) else { continue };
                let t = grid.nearest(true_period);
                for ((k, _), pg) in members.iter().zip(&pgs) {
                    if pg.entries[t].statistic.is_nan() {
                        continue;
                    }
                    let other_p = pg.entries.iter().enumerate().filter(|(i, _)| *i != t).map(|(_, e)| e.p_value).collect();
                    out[*k] = Some(Outcome { true_p: pg.entries[t].p_value, other_p, correct_peak: Some(pg.peak() == Some(t)) });
                }
            }
        }
    }
    out
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

fn summarize(method: ModelSpec, snr: f64, level: f64, outcomes: &[Option<Outcome>]) -> PowerRow {
    let ok: Vec<&Outcome> = outcomes.iter().flatten().collect();
    let alpha = 1.0 - level;
    let reps = ok.len();
    let power = mean(ok.iter().map(|o| if o.true_p < alpha { 1.0 } else { 0.0 }));
    let se = if reps > 0 { (power * (1.0 - power) / reps as f64).sqrt() } else { f64::NAN };
    let gridded = ok.first().is_some_and(|o| o.correct_peak.is_some());
    PowerRow {
        method,
        snr,
        level,
        power,
        se,
        mean_false_periods: gridded.then(|| mean(ok.iter().map(|o| o.other_p.iter().filter(|p| **p < alpha).count() as f64))),
        correct_peak_rate: gridded.then(|| mean(ok.iter().map(|o| if o.correct_peak == Some(true) { 1.0 } else { 0.0 }))),
        reps,
        failures: outcomes.len() - reps,
    }
}

/// Simulates `reps` curves per SNR, tests every method and aggregates the
/// detection rates per `(method, snr, level)`. Replicates run through `exec`
/// with seeds derived from `(seed, snr index, replicate)`, so the report does
/// not depend on scheduling.
pub fn estimate_power<E: Executor>(study: &PowerStudy, exec: &E) -> Result<PowerReport> {
    study.validate()?;
    let true_period = study.scenario.signal.period().unwrap_or(f64::NAN);
    let reps = study.reps;
    let outcomes: Vec<Vec<Option<Outcome>>> = exec.map_indexed(study.snr_grid.len() * reps, |idx| {
        let (s, r) = (idx / reps, idx % reps);
        let scenario = SimScenario {
            target_snr: Some(study.snr_grid[s]),
            seed: derive_seed(study.seed, s as u64, r as u64),
            ..study.scenario.clone()
        };
        run_replicate(&scenario, true_period, &study.methods, study.grid.as_ref(), study.evaluator)
    });

    let mut rows = Vec::new();
    for (k, method) in study.methods.iter().enumerate() {
        for (s, &snr) in study.snr_grid.iter().enumerate() {
            let per_method: Vec<Option<Outcome>> = outcomes[s * reps..(s + 1) * reps].iter().map(|o| o[k].clone()).collect();
            for &level in &study.levels {
                rows.push(summarize(*method, snr, level, &per_method));
            }
        }
    }
    Ok(PowerReport { rows })
}

/// Red-noise data analysed with the red and the white Gaussian process
/// families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RedWhiteStudy {
    pub rho_grid: Vec<f64>,
    pub reps: usize,
    pub seed: u64,
    pub sampling: Sampling,
    /// Shared mean curve; drawn once from `signal_seed`.
    pub signal: Signal,
    pub signal_seed: u64,
    pub noise_variance: f64,
    pub grid: PeriodGrid,
    pub alpha_family: f64,
    /// Template for both families; its family is overridden.
    pub spec: ModelSpec,
    #[serde(default)]
    pub evaluator: Evaluator,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilySummary {
    pub correct_peak_rate: f64,
    pub correct_peak_se: f64,
    pub mean_false_periods: f64,
    /// Standard error of the mean false-period count.
    pub false_periods_se: f64,
    /// Fraction of replicates with the true period significant.
    pub true_detection_rate: f64,
    pub reps: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RedWhiteRow {
    pub rho: f64,
    pub red: FamilySummary,
    pub white: FamilySummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RedWhiteReport {
    /// Per-test level of the Sidak correction over the grid.
    pub level: f64,
    pub rows: Vec<RedWhiteRow>,
}

fn family_summary(outcomes: &[Option<Outcome>], alpha: f64) -> FamilySummary {
    let ok: Vec<&Outcome> = outcomes.iter().flatten().collect();
    let reps = ok.len();
    let peak = mean(ok.iter().map(|o| if o.correct_peak == Some(true) { 1.0 } else { 0.0 }));
    let counts: Vec<f64> = ok.iter().map(|o| o.other_p.iter().filter(|p| **p < alpha).count() as f64).collect();
    let fp = mean(counts.iter().copied());
    let fp_var = if reps > 1 { counts.iter().map(|c| (c - fp).powi(2)).sum::<f64>() / (reps - 1) as f64 } else { f64::NAN };
    FamilySummary {
        correct_peak_rate: peak,
        correct_peak_se: (peak * (1.0 - peak) / reps as f64).sqrt(),
        mean_false_periods: fp,
        false_periods_se: (fp_var / reps as f64).sqrt(),
        true_detection_rate: mean(ok.iter().map(|o| if o.true_p < alpha { 1.0 } else { 0.0 })),
        reps,
        failures: outcomes.len() - reps,
    }
}

/// For each `rho`, simulates curves sharing one periodic mean with red noise
/// and scans them with the red and the white families at the Sidak level of
/// the grid.
pub fn red_vs_white_study<E: Executor>(study: &RedWhiteStudy, exec: &E) -> Result<RedWhiteReport> {
    if study.rho_grid.is_empty() || study.rho_grid.iter().any(|r| !(0.0..1.0).contains(r)) {
        bail!(Validation, "rho values must lie in [0, 1)");
    }
    if study.reps == 0 {
        bail!(Validation, "the study needs at least one replicate");
    }
    let Some(true_period) = study.signal.period() else {
        bail!(Validation, "the signal has no true period");
    };
    let level = sidak_level(study.alpha_family, study.grid.len())?;
    let methods = [
        ModelSpec { family: crate::models::Family::GprRed, ..study.spec },
        ModelSpec { family: crate::models::Family::Gpr, ..study.spec },
    ];
    let reps = study.reps;
    let outcomes: Vec<Vec<Option<Outcome>>> = exec.map_indexed(study.rho_grid.len() * reps, |idx| {
        let (s, r) = (idx / reps, idx % reps);
        let scenario = SimScenario {
            sampling: study.sampling.clone(),
            signal: study.signal.clone(),
            noise: Noise::Red { rho: study.rho_grid[s], variance: study.noise_variance },
            accuracies: None,
            target_snr: None,
            seed: derive_seed(study.seed, s as u64, r as u64),
            signal_seed: Some(study.signal_seed),
        };
        run_replicate(&scenario, true_period, &methods, Some(&study.grid), study.evaluator)
    });
    let alpha = 1.0 - level;
    let rows = study
        .rho_grid
        .iter()
        .enumerate()
        .map(|(s, &rho)| {
            let slice = &outcomes[s * reps..(s + 1) * reps];
            let pick = |k: usize| slice.iter().map(|o| o[k].clone()).collect::<Vec<_>>();
            RedWhiteRow { rho, red: family_summary(&pick(0), alpha), white: family_summary(&pick(1), alpha) }
        })
        .collect();
    Ok(RedWhiteReport { level, rows })
}
