//! Trial-period grids, periodogram scans, two-stage refinement and
//! detection reports.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::covariance::KernelParams;
use crate::error::{bail, Error, Result};
use crate::exec::Executor;
use crate::lightcurve::LightCurve;
use crate::models::{fit_gpr, prepare, sinusoid_m1, ModelSpec, Statistic};
use crate::testing::{observed_statistic, run_test, sidak_alpha, sidak_level, Evaluator, TestFlag};

fn round_period(p: f64) -> f64 {
    (p * 1e12).round() / 1e12
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum GridKind {
    UniformPeriod { step: f64 },
    /// Frequencies spaced `1 / (oversampling * timespan)` apart.
    UniformFrequency { oversampling: f64, timespan: f64 },
    /// Fine windows around stage-one peaks.
    Refined { rough_len: usize, fine_step: f64 },
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodGrid {
    periods: Vec<f64>,
    kind: GridKind,
}

impl PeriodGrid {
    /// `p_min, p_min + step, ...` up to `p_max`, with a small allowance so
    /// that `p_max` itself is included when it lies on the lattice.
    pub fn uniform_period(p_min: f64, p_max: f64, step: f64) -> Result<Self> {
        check_range(p_min, p_max)?;
        if !(step.is_finite() && step > 0.0) {
            bail!(Domain, "grid step must be positive, got {step}");
        }
        let count = ((p_max - p_min) / step + 1e-9).floor() as usize + 1;
        let periods = (0..count).map(|i| round_period(p_min + i as f64 * step)).collect();
        Self::checked(periods, GridKind::UniformPeriod { step })
    }

    /// Frequencies from `1 / p_max` to `1 / p_min` with spacing
    /// `1 / (oversampling * timespan)`, returned as increasing periods.
    pub fn uniform_frequency(p_min: f64, p_max: f64, timespan: f64, oversampling: f64) -> Result<Self> {
        check_range(p_min, p_max)?;
        if !(timespan.is_finite() && timespan > 0.0 && oversampling.is_finite() && oversampling > 0.0) {
            bail!(Domain, "timespan and oversampling must be positive");
        }
        let (f_lo, f_hi) = (1.0 / p_max, 1.0 / p_min);
        let df = 1.0 / (oversampling * timespan);
        let count = ((f_hi - f_lo) / df + 1e-9).floor() as usize + 1;
        let mut periods: Vec<f64> = (0..count).map(|i| 1.0 / (f_lo + i as f64 * df)).collect();
        periods.reverse();
        Self::checked(periods, GridKind::UniformFrequency { oversampling, timespan })
    }

    pub fn from_periods(periods: Vec<f64>) -> Result<Self> {
        Self::checked(periods, GridKind::Custom)
    }

    fn checked(periods: Vec<f64>, kind: GridKind) -> Result<Self> {
        if periods.is_empty() {
            bail!(Domain, "period grid is empty");
        }
        if periods.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            bail!(Domain, "grid periods must be positive and finite");
        }
        if periods.windows(2).any(|w| w[1] <= w[0]) {
            bail!(Domain, "grid periods must be strictly increasing");
        }
        Ok(Self { periods, kind })
    }

    pub fn periods(&self) -> &[f64] {
        &self.periods
    }

    pub fn len(&self) -> usize {
        self.periods.len()
    }

    pub fn is_empty(&self) -> bool {
        self.periods.is_empty()
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    /// Spacing around entry `i`: the larger gap to its neighbours.
    pub fn local_step(&self, i: usize) -> f64 {
        if let GridKind::UniformPeriod { step } = self.kind {
            return step;
        }
        let p = &self.periods;
        let left = if i > 0 { p[i] - p[i - 1] } else { 0.0 };
        let right = if i + 1 < p.len() { p[i + 1] - p[i] } else { 0.0 };
        left.max(right)
    }

    /// Index of the grid period closest to `period`.
    pub fn nearest(&self, period: f64) -> usize {
        nearest_index(&self.periods, period)
    }
}

fn nearest_index(periods: &[f64], period: f64) -> usize {
    periods
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - period).abs().total_cmp(&(b.1 - period).abs()))
        .map_or(0, |(i, _)| i)
}

fn check_range(p_min: f64, p_max: f64) -> Result<()> {
    if !(p_min.is_finite() && p_max.is_finite() && p_min > 0.0 && p_min < p_max) {
        bail!(Domain, "period range needs 0 < p_min < p_max, got [{p_min}, {p_max}]");
    }
    Ok(())
}

/// Why an entry does not carry an ordinary test result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryFlag {
    ConstantData,
    PerfectFit,
    /// Fitting or the p-value computation failed; see the entry message.
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodogramEntry {
    pub period: f64,
    pub statistic: f64,
    pub p_value: f64,
    pub significant: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flag: Option<EntryFlag>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hyperparams: Option<KernelParams>,
}

impl PeriodogramEntry {
    fn failed(period: f64, err: &Error) -> Self {
        Self {
            period,
            statistic: f64::NAN,
            p_value: 1.0,
            significant: false,
            flag: Some(EntryFlag::Failed),
            message: Some(err.to_string()),
            hyperparams: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Periodogram {
    pub entries: Vec<PeriodogramEntry>,
    pub spec: ModelSpec,
    pub statistic: Statistic,
    pub alpha_family: f64,
    /// Number of tests in the Sidak correction.
    pub sidak_m: usize,
    /// Per-test significance level.
    pub per_test_alpha: f64,
    pub grid: GridKind,
}

impl Periodogram {
    pub fn periods(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.period).collect()
    }

    pub fn nearest(&self, period: f64) -> usize {
        nearest_index(&self.periods(), period)
    }

    /// Index of the largest statistic; ties resolve to the shorter period.
    pub fn peak(&self) -> Option<usize> {
        argmax(self.entries.iter().enumerate().map(|(i, e)| (i, e.statistic)))
    }

    pub fn significant_count(&self) -> usize {
        self.entries.iter().filter(|e| e.significant).count()
    }
}

fn argmax(items: impl Iterator<Item = (usize, f64)>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, s) in items {
        if s.is_nan() {
            continue;
        }
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((i, s));
        }
    }
    best.map(|(i, _)| i)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMode {
    /// Refit hyperparameters at every trial period.
    #[default]
    PerPeriod,
    /// Fit once at the peak of a sinusoid periodogram and reuse the
    /// hyperparameters at every trial period.
    OnceAtPeak,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScanConfig {
    pub alpha_family: f64,
    pub evaluator: Evaluator,
    /// Number of tests for the Sidak correction; the grid size when unset.
    pub sidak_m: Option<usize>,
    /// Overrides the Sidak per-test level.
    pub per_test_alpha: Option<f64>,
    pub fit_mode: FitMode,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self { alpha_family: 0.05, evaluator: Evaluator::Auto, sidak_m: None, per_test_alpha: None, fit_mode: FitMode::PerPeriod }
    }
}

impl ScanConfig {
    fn levels(&self, grid_len: usize) -> Result<(usize, f64)> {
        let m = self.sidak_m.unwrap_or(grid_len);
        let alpha = match self.per_test_alpha {
            Some(a) if a > 0.0 && a < 1.0 => a,
            Some(a) => bail!(Domain, "per-test alpha must lie in (0, 1), got {a}"),
            None => sidak_alpha(self.alpha_family, m)?,
        };
        Ok((m, alpha))
    }

    /// Per-test confidence level `1 - alpha`.
    pub fn level(&self, grid_len: usize) -> Result<f64> {
        match self.per_test_alpha {
            Some(a) => Ok(1.0 - a),
            None => sidak_level(self.alpha_family, self.sidak_m.unwrap_or(grid_len)),
        }
    }
}

/// Scans `grid` with the statistic of `spec`.
pub fn scan<E: Executor>(lc: &LightCurve, grid: &PeriodGrid, spec: &ModelSpec, cfg: &ScanConfig, exec: &E) -> Result<Periodogram> {
    Ok(scan_statistics(lc, grid, spec, &[spec.statistic], cfg, exec)?.remove(0))
}

/// Scans `grid` once, producing a periodogram for each statistic in
/// `stats` from shared fits and factorizations.
pub fn scan_statistics<E: Executor>(
    lc: &LightCurve,
    grid: &PeriodGrid,
    spec: &ModelSpec,
    stats: &[Statistic],
    cfg: &ScanConfig,
    exec: &E,
) -> Result<Vec<Periodogram>> {
    if stats.is_empty() {
        bail!(Validation, "no statistic requested");
    }
    spec.validate(lc)?;
    let (m, alpha) = cfg.levels(grid.len())?;
    let mut spec_eff = *spec;
    if spec.family.is_gpr() && spec.hyperparams.is_none() && cfg.fit_mode == FitMode::OnceAtPeak {
        let peak = sinusoid_peak(lc, grid)?;
        spec_eff.hyperparams = Some(fit_gpr(lc, peak, spec.family, spec.objective, &spec.fit)?.hyperparams);
    }

    let per_period: Vec<Vec<PeriodogramEntry>> = exec.map_indexed(grid.len(), |i| {
        let period = grid.periods()[i];
        match prepare(lc, period, &spec_eff, stats) {
            Err(e) => stats.iter().map(|_| PeriodogramEntry::failed(period, &e)).collect(),
            Ok(prepared) => prepared
                .matrices
                .iter()
                .map(|(_, mats)| match run_test(lc.values(), mats, cfg.evaluator, alpha, &[]) {
                    Err(e) => PeriodogramEntry::failed(period, &e),
                    Ok(r) => PeriodogramEntry {
                        period,
                        statistic: r.statistic,
                        p_value: r.p_value,
                        significant: r.significant,
                        flag: r.flag.map(|f| match f {
                            TestFlag::ConstantData => EntryFlag::ConstantData,
                            TestFlag::PerfectFit => EntryFlag::PerfectFit,
                        }),
                        message: None,
                        hyperparams: prepared.fit.map(|f| f.hyperparams),
                    },
                })
                .collect(),
        }
    });

    Ok(stats
        .iter()
        .enumerate()
        .map(|(k, &statistic)| Periodogram {
            entries: per_period.iter().map(|row| row[k].clone()).collect(),
            spec: ModelSpec { statistic, ..*spec },
            statistic,
            alpha_family: cfg.alpha_family,
            sidak_m: m,
            per_test_alpha: alpha,
            grid: grid.kind(),
        })
        .collect())
}

/// Period of the largest unweighted sinusoid statistic on the grid.
fn sinusoid_peak(lc: &LightCurve, grid: &PeriodGrid) -> Result<f64> {
    let stats = grid.periods().iter().enumerate().map(|(i, &p)| {
        let s = sinusoid_m1(lc.times(), p, None).and_then(|m| observed_statistic(lc.values(), &m)).unwrap_or(f64::NAN);
        (i, s)
    });
    match argmax(stats) {
        Some(i) => Ok(grid.periods()[i]),
        None => bail!(Fit, "no trial period gave a finite sinusoid statistic"),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoStage {
    pub rough: Periodogram,
    pub refined: Periodogram,
}

/// Rough scan, then fine scans over `+/-` one rough step around the `top_n`
/// entries ranked as in [`detect`]. Stage two keeps the stage-one Sidak
/// level.
pub fn two_stage_search<E: Executor>(
    lc: &LightCurve,
    rough: &PeriodGrid,
    top_n: usize,
    fine_step: f64,
    spec: &ModelSpec,
    cfg: &ScanConfig,
    exec: &E,
) -> Result<TwoStage> {
    if top_n == 0 {
        bail!(Domain, "two-stage search needs top_n >= 1");
    }
    if !(fine_step.is_finite() && fine_step > 0.0) {
        bail!(Domain, "fine step must be positive, got {fine_step}");
    }
    let stage1 = scan(lc, rough, spec, cfg, exec)?;
    let mut order: Vec<usize> = (0..stage1.entries.len()).filter(|&i| !stage1.entries[i].statistic.is_nan()).collect();
    let e = &stage1.entries;
    order.sort_by(|&a, &b| e[a].p_value.total_cmp(&e[b].p_value).then(e[b].statistic.total_cmp(&e[a].statistic)).then(a.cmp(&b)));
    order.truncate(top_n.min(order.len()));
    if order.is_empty() {
        bail!(Numerical, "no finite statistic in the rough scan");
    }

    let mut periods = Vec::new();
    for &i in &order {
        let centre = rough.periods()[i];
        let half = rough.local_step(i);
        let count = (2.0 * half / fine_step + 1e-9).floor() as usize + 1;
        periods.extend((0..count).map(|k| round_period(centre - half + k as f64 * fine_step)).filter(|p| *p > 0.0));
    }
    periods.sort_by(f64::total_cmp);
    periods.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    let fine = PeriodGrid { periods, kind: GridKind::Refined { rough_len: rough.len(), fine_step } };

    let stage2_cfg = ScanConfig { sidak_m: Some(stage1.sidak_m), per_test_alpha: Some(stage1.per_test_alpha), ..*cfg };
    let refined = scan(lc, &fine, spec, &stage2_cfg, exec)?;
    Ok(TwoStage { rough: stage1, refined })
}

/// Ratio `n : m` between an extra period and the primary one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Harmonic {
    pub n: u32,
    pub m: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectedPeriod {
    pub period: f64,
    pub statistic: f64,
    pub p_value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub harmonic: Option<Harmonic>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Detection {
    pub primary: Option<DetectedPeriod>,
    pub extras: Vec<DetectedPeriod>,
}

const HARMONIC_RTOL: f64 = 0.01;

/// Closest small-integer ratio `n / m` (`n, m <= 4`, not 1) within 1 %.
pub fn harmonic_ratio(period: f64, primary: f64) -> Option<Harmonic> {
    let r = period / primary;
    let mut best: Option<(Harmonic, f64)> = None;
    for n in 1..=4u32 {
        for m in 1..=4u32 {
            if n == m || gcd(n, m) != 1 {
                continue;
            }
            let err = (r / (n as f64 / m as f64) - 1.0).abs();
            if err <= HARMONIC_RTOL && best.is_none_or(|(_, e)| err < e) {
                best = Some((Harmonic { n, m }, err));
            }
        }
    }
    best.map(|(h, _)| h)
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Primary period and the other significant periods with advisory
/// harmonic annotations.
///
/// The primary period has the smallest p-value among significant entries,
/// with ties going to the larger statistic. For the sinusoid families the
/// null distribution is the same at every period, so this is the largest
/// significant statistic. Gaussian process fits at exact multiples of the
/// true period reach slightly larger statistics through extra flexibility,
/// which their p-values account for.
pub fn detect(pg: &Periodogram) -> Detection {
    let sig = pg.entries.iter().enumerate().filter(|(_, e)| e.significant && !e.statistic.is_nan());
    let Some((best, _)) = sig.clone().min_by(|(i, a), (j, b)| {
        a.p_value.total_cmp(&b.p_value).then(b.statistic.total_cmp(&a.statistic)).then(i.cmp(j))
    }) else {
        return Detection::default();
    };
    let to_detected = |e: &PeriodogramEntry, harmonic| DetectedPeriod { period: e.period, statistic: e.statistic, p_value: e.p_value, harmonic };
    let primary = to_detected(&pg.entries[best], None);
    let extras = sig.filter(|(i, _)| *i != best).map(|(_, e)| to_detected(e, harmonic_ratio(e.period, primary.period))).collect();
    Detection { primary: Some(primary), extras }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Sequential;
    use crate::models::Family;
    use alloc::vec;

    #[test]
    fn grid_counts() {
        assert_eq!(PeriodGrid::uniform_period(0.5, 10.0, 0.1).unwrap().len(), 96);
        assert_eq!(PeriodGrid::uniform_period(0.5, 20.0, 0.1).unwrap().len(), 196);
        let g = PeriodGrid::uniform_period(1.0, 10.0, 0.1).unwrap();
        assert_eq!(g.len(), 91);
        assert_eq!(*g.periods().last().unwrap(), 10.0);
        assert_eq!(g.periods()[41], 5.1);
        assert!(PeriodGrid::uniform_period(2.0, 1.0, 0.1).is_err());
        assert!(PeriodGrid::uniform_period(1.0, 2.0, 0.0).is_err());
    }

    #[test]
    fn frequency_grid_has_constant_spacing() {
        let g = PeriodGrid::uniform_frequency(0.5, 30.0, 100.0, 5.0).unwrap();
        let f: Vec<f64> = g.periods().iter().rev().map(|p| 1.0 / p).collect();
        let df = 1.0 / 500.0;
        assert!(f.windows(2).all(|w| ((w[1] - w[0]) - df).abs() < 1e-12));
        assert!(g.periods().windows(2).all(|w| w[1] > w[0]));
        assert!(*g.periods().first().unwrap() >= 0.5 && *g.periods().last().unwrap() <= 30.0 + 1e-12);
    }

    fn entry(period: f64, statistic: f64, significant: bool) -> PeriodogramEntry {
        PeriodogramEntry { period, statistic, p_value: if significant { 1e-6 } else { 0.5 }, significant, flag: None, message: None, hyperparams: None }
    }

    fn pg(entries: Vec<PeriodogramEntry>) -> Periodogram {
        Periodogram {
            entries,
            spec: ModelSpec::new(Family::Gpr, Statistic::F),
            statistic: Statistic::F,
            alpha_family: 0.05,
            sidak_m: 3,
            per_test_alpha: 0.01,
            grid: GridKind::Custom,
        }
    }

    #[test]
    fn detection_reports() {
        assert_eq!(detect(&pg(vec![entry(1.0, 3.0, false), entry(2.0, 5.0, false)])), Detection::default());

        let d = detect(&pg(vec![entry(13.8, 2.0, false), entry(13.9, 9.0, true), entry(14.0, 3.0, false)]));
        assert_eq!(d.primary.unwrap().period, 13.9);
        assert!(d.extras.is_empty());

        let d = detect(&pg(vec![entry(2.2, 9.0, true), entry(3.0, 1.0, false), entry(4.4, 4.0, true)]));
        assert_eq!(d.primary.as_ref().unwrap().period, 2.2);
        assert_eq!(d.extras.len(), 1);
        assert_eq!(d.extras[0].harmonic, Some(Harmonic { n: 2, m: 1 }));
    }

    #[test]
    fn primary_prefers_the_smaller_p_value() {
        let mut multiple = entry(4.8, 4.3, true);
        multiple.p_value = 1e-25;
        let mut truth = entry(2.4, 3.7, true);
        truth.p_value = 1e-32;
        let d = detect(&pg(vec![truth, multiple]));
        assert_eq!(d.primary.unwrap().period, 2.4);
        assert_eq!(d.extras[0].harmonic, Some(Harmonic { n: 2, m: 1 }));
    }

    #[test]
    fn primary_is_invariant_under_monotone_rescaling() {
        let entries = vec![entry(1.0, 0.3, true), entry(2.0, 1.7, true), entry(3.0, 0.9, true)];
        let base = detect(&pg(entries.clone())).primary.unwrap().period;
        let rescaled: Vec<_> = entries.into_iter().map(|mut e| {
            e.statistic = (e.statistic * 3.0).exp();
            e
        }).collect();
        assert_eq!(detect(&pg(rescaled)).primary.unwrap().period, base);
    }

    #[test]
    fn harmonic_annotation() {
        assert_eq!(harmonic_ratio(1.1, 2.2), Some(Harmonic { n: 1, m: 2 }));
        assert_eq!(harmonic_ratio(3.3, 2.2), Some(Harmonic { n: 3, m: 2 }));
        assert_eq!(harmonic_ratio(2.21, 2.2), None);
        assert_eq!(harmonic_ratio(5.0, 2.2), None);
    }

    fn sine_curve(period: f64, noise: f64) -> LightCurve {
        use crate::simulate::{simulate, Noise, Sampling, SimScenario, Signal};
        simulate(&SimScenario {
            sampling: Sampling::Uniform { n: 120, timespan: 60.0 },
            signal: Signal::Sine { period, amplitude: 1.0, intercept: 12.0, coefficients: None },
            noise: Noise::White { variance: noise },
            accuracies: None,
            target_snr: None,
            seed: 11,
            signal_seed: None,
        })
        .unwrap()
    }

    #[test]
    fn noiseless_sine_peaks_at_true_period() {
        let lc = sine_curve(2.4, 0.0);
        let grid = PeriodGrid::uniform_period(0.5, 10.0, 0.1).unwrap();
        let pg = scan(&lc, &grid, &ModelSpec::new(Family::SinusoidLs, Statistic::F), &ScanConfig::default(), &Sequential).unwrap();
        let peak = &pg.entries[pg.peak().unwrap()];
        assert_eq!(peak.period, 2.4);
        assert_eq!(peak.flag, Some(EntryFlag::PerfectFit));
        assert_eq!(detect(&pg).primary.unwrap().period, 2.4);
    }

    #[test]
    fn two_stage_refines_the_peak() {
        let lc = sine_curve(2.1763, 0.05);
        let grid = PeriodGrid::uniform_period(0.5, 10.0, 0.1).unwrap();
        let spec = ModelSpec::new(Family::SinusoidLs, Statistic::F);
        let ts = two_stage_search(&lc, &grid, 3, 0.001, &spec, &ScanConfig::default(), &Sequential).unwrap();
        assert_eq!(ts.rough.entries[ts.rough.peak().unwrap()].period, 2.2);
        let best = ts.refined.entries[ts.refined.peak().unwrap()].period;
        assert!((best - 2.1763).abs() < 0.002, "{best}");
        assert_eq!(ts.refined.sidak_m, 96);
        assert_eq!(ts.refined.per_test_alpha, ts.rough.per_test_alpha);
    }

    #[test]
    fn two_stage_degenerate_refinement_and_clamping() {
        let lc = sine_curve(3.0, 0.5);
        let grid = PeriodGrid::uniform_period(2.0, 4.0, 0.1).unwrap();
        let spec = ModelSpec::new(Family::SinusoidLs, Statistic::F);
        let cfg = ScanConfig::default();
        // more peaks requested than grid points
        let ts = two_stage_search(&lc, &grid, 1000, 0.1, &spec, &cfg, &Sequential).unwrap();
        // with the rough step as the fine step every refined period is a rough one
        for e in &ts.refined.entries {
            let i = grid.nearest(e.period);
            assert!((grid.periods()[i] - e.period).abs() < 1e-9 || e.period < 2.0 || e.period > 4.0);
            if (2.0..=4.0).contains(&e.period) {
                assert!((ts.rough.entries[i].statistic - e.statistic).abs() <= 1e-12 * e.statistic.abs());
            }
        }
    }

    #[test]
    fn scan_is_independent_of_grid_order() {
        let lc = sine_curve(2.4, 1.0);
        let spec = ModelSpec::new(Family::SinusoidLs, Statistic::F);
        let full = scan(&lc, &PeriodGrid::uniform_period(1.0, 4.0, 0.1).unwrap(), &spec, &ScanConfig::default(), &Sequential).unwrap();
        let part = scan(&lc, &PeriodGrid::from_periods(vec![2.4, 3.0]).unwrap(), &spec, &ScanConfig::default(), &Sequential).unwrap();
        let i = full.nearest(2.4);
        assert_eq!(full.entries[i].statistic, part.entries[0].statistic);
        assert_eq!(full.entries[i].p_value, part.entries[0].p_value);
    }
}
