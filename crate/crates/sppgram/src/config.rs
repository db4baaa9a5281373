//! Run settings merged from command-line flags, an optional JSON file and
//! built-in defaults, in that order of precedence.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sppgram_core::periodogram::{FitMode, ScanConfig};
use sppgram_core::{Evaluator, Family, FitConfig, KernelParams, LightCurve, ModelSpec, Objective, PeriodGrid, Statistic};

use crate::io::ColumnSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridChoice {
    /// Evenly spaced periods.
    Period,
    /// Evenly spaced frequencies, oversampled relative to `1 / timespan`.
    Frequency,
}

/// One source of settings; unset fields fall through to the next source.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigLayer {
    pub family: Option<Family>,
    pub statistics: Option<Vec<Statistic>>,
    pub objective: Option<Objective>,
    pub fit: Option<FitConfig>,
    pub fit_mode: Option<FitMode>,
    pub hyperparams: Option<KernelParams>,
    pub grid: Option<GridChoice>,
    pub p_min: Option<f64>,
    pub p_max: Option<f64>,
    pub step: Option<f64>,
    pub oversampling: Option<f64>,
    pub alpha_family: Option<f64>,
    pub sidak_m: Option<usize>,
    pub per_test_alpha: Option<f64>,
    pub evaluator: Option<Evaluator>,
    pub refine_top: Option<usize>,
    pub fine_step: Option<f64>,
    pub delimiter: Option<char>,
    pub accuracies: Option<bool>,
}

macro_rules! overlay {
    ($hi:ident, $lo:ident; $($f:ident),*) => {
        ConfigLayer { $($f: $hi.$f.or($lo.$f)),* }
    };
}

impl ConfigLayer {
    /// Fields set here win over those of `lower`.
    pub fn over(self, lower: ConfigLayer) -> ConfigLayer {
        overlay!(self, lower; family, statistics, objective, fit, fit_mode, hyperparams, grid, p_min, p_max, step,
            oversampling, alpha_family, sidak_m, per_test_alpha, evaluator, refine_top, fine_step, delimiter, accuracies)
    }
}

/// Fully resolved settings of an `analyze` or `periodogram` run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub family: Family,
    pub statistics: Vec<Statistic>,
    pub objective: Objective,
    pub fit: FitConfig,
    pub hyperparams: Option<KernelParams>,
    pub grid: GridChoice,
    pub p_min: f64,
    pub p_max: f64,
    pub step: f64,
    pub oversampling: f64,
    pub scan: ScanConfig,
    /// Number of rough peaks to refine, with the fine grid step.
    pub refine: Option<(usize, f64)>,
    pub delimiter: char,
    pub accuracies: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            family: Family::Gpr,
            statistics: vec![Statistic::F],
            objective: Objective::MarginalLikelihood,
            fit: FitConfig::default(),
            hyperparams: None,
            grid: GridChoice::Period,
            p_min: 0.5,
            p_max: 10.0,
            step: 0.1,
            oversampling: 5.0,
            scan: ScanConfig::default(),
            refine: None,
            delimiter: ',',
            accuracies: true,
        }
    }
}

pub const DEFAULT_FINE_STEP: f64 = 0.001;

impl RunConfig {
    /// Applies `layer` on top of the defaults and validates the result.
    pub fn resolve(layer: ConfigLayer) -> Result<Self, String> {
        let d = RunConfig::default();
        let cfg = RunConfig {
            family: layer.family.unwrap_or(d.family),
            statistics: layer.statistics.unwrap_or(d.statistics),
            objective: layer.objective.unwrap_or(d.objective),
            fit: layer.fit.unwrap_or(d.fit),
            hyperparams: layer.hyperparams,
            grid: layer.grid.unwrap_or(d.grid),
            p_min: layer.p_min.unwrap_or(d.p_min),
            p_max: layer.p_max.unwrap_or(d.p_max),
            step: layer.step.unwrap_or(d.step),
            oversampling: layer.oversampling.unwrap_or(d.oversampling),
            scan: ScanConfig {
                alpha_family: layer.alpha_family.unwrap_or(d.scan.alpha_family),
                evaluator: layer.evaluator.unwrap_or(d.scan.evaluator),
                sidak_m: layer.sidak_m,
                per_test_alpha: layer.per_test_alpha,
                fit_mode: layer.fit_mode.unwrap_or(d.scan.fit_mode),
            },
            refine: layer.refine_top.map(|n| (n, layer.fine_step.unwrap_or(DEFAULT_FINE_STEP))),
            delimiter: layer.delimiter.unwrap_or(d.delimiter),
            accuracies: layer.accuracies.unwrap_or(d.accuracies),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), String> {
        if self.statistics.is_empty() {
            return Err("at least one statistic is required".into());
        }
        if !(self.p_min > 0.0 && self.p_max > self.p_min && self.p_max.is_finite()) {
            return Err(format!("period range must satisfy 0 < p_min < p_max, got [{}, {}]", self.p_min, self.p_max));
        }
        if !(self.step > 0.0 && self.step.is_finite()) || !(self.oversampling > 0.0 && self.oversampling.is_finite()) {
            return Err("grid step and oversampling must be positive".into());
        }
        if !(self.scan.alpha_family > 0.0 && self.scan.alpha_family < 1.0) {
            return Err(format!("alpha_family must lie in (0, 1), got {}", self.scan.alpha_family));
        }
        if let Some((n, step)) = self.refine {
            if n == 0 || !(step > 0.0 && step.is_finite()) {
                return Err("refinement needs at least one peak and a positive fine step".into());
            }
        }
        if !self.delimiter.is_ascii() {
            return Err(format!("delimiter must be a single ASCII character, got {:?}", self.delimiter));
        }
        if let Evaluator::MonteCarlo { reps, .. } = self.scan.evaluator {
            if reps < sppgram_core::quadform::MIN_MC_REPS {
                return Err(format!("Monte Carlo needs at least {} replicates", sppgram_core::quadform::MIN_MC_REPS));
            }
        }
        self.fit.validate().map_err(|e| e.to_string())
    }

    pub fn columns(&self) -> ColumnSpec {
        ColumnSpec { delimiter: self.delimiter as u8, accuracies: self.accuracies }
    }

    pub fn spec(&self, statistic: Statistic) -> ModelSpec {
        let spec = ModelSpec::new(self.family, statistic).with_objective(self.objective).with_fit(self.fit);
        match self.hyperparams {
            Some(h) => spec.with_hyperparams(h),
            None => spec,
        }
    }

    pub fn period_grid(&self, lc: &LightCurve) -> sppgram_core::Result<PeriodGrid> {
        match self.grid {
            GridChoice::Period => PeriodGrid::uniform_period(self.p_min, self.p_max, self.step),
            GridChoice::Frequency => PeriodGrid::uniform_frequency(self.p_min, self.p_max, lc.timespan(), self.oversampling),
        }
    }
}

/// Parses a snake_case serde name such as `gpr_red` into an enum value.
pub fn parse_name<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| format!("unknown value {s:?}"))
}
