use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sppgram::bench::timing_benchmark;
use sppgram::config::{parse_name, ConfigLayer, GridChoice, RunConfig};
use sppgram::io::{self, IoError};
use sppgram::parallel::Pool;
use sppgram::selftest::{run_selftest, Fault};
use sppgram_core::periodogram::{detect, scan, two_stage_search, FitMode};
use sppgram_core::power::{estimate_power, red_vs_white_study, PowerStudy, RedWhiteStudy};
use sppgram_core::quadform::{imhof_survival, mc_survival, saddlepoint_survival};
use sppgram_core::simulate::simulate;
use sppgram_core::{Detection, Error, Evaluator, Family, LightCurve, Objective, Periodogram, QuadFormSpec, SimScenario, Statistic};

#[derive(Parser)]
#[command(name = "sppgram", version, about = "Period detection with p-values for irregularly sampled light curves")]
struct Cli {
    /// Worker threads; defaults to one per core.
    #[arg(long, global = true, env = "SPPGRAM_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scan a light curve and report the detected periods.
    Analyze {
        input: PathBuf,
        /// Directory for the periodogram CSV files and report.json.
        #[arg(short, long, default_value = "sppgram-out")]
        out_dir: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Write the periodogram of one statistic as CSV or JSON.
    Periodogram {
        input: PathBuf,
        /// Output file; standard output when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Generate a synthetic light curve from a scenario JSON file.
    Simulate {
        scenario: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a power study described by a JSON file.
    Power {
        study: PathBuf,
        /// The file describes a red-noise versus white-noise comparison.
        #[arg(long)]
        red_white: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Tail probability of a weighted sum of chi-square(1) variables.
    Pvalue {
        /// JSON request; standard input when omitted or `-`.
        input: Option<PathBuf>,
    },
    /// Cross-check the p-value evaluators against each other.
    Selftest {
        #[arg(long)]
        quick: bool,
        #[arg(long, value_enum, default_value = "none")]
        inject_fault: Fault,
    },
    /// Time the p-value evaluators.
    Bench {
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[arg(long, default_value_t = 50)]
        reps: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Also write the timings as JSON.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ModelArgs {
    /// JSON settings file; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// sinusoid_ls, sinusoid_wls, gpr, gpr_weighted or gpr_red.
    #[arg(long, value_parser = parse_name::<Family>)]
    family: Option<Family>,
    /// f, cvf or both separated by a comma.
    #[arg(long, value_delimiter = ',', value_parser = parse_name::<Statistic>)]
    statistic: Vec<Statistic>,
    /// marginal_likelihood or loo_cve.
    #[arg(long, value_parser = parse_name::<Objective>)]
    objective: Option<Objective>,
    /// period or frequency.
    #[arg(long, value_parser = parse_name::<GridChoice>)]
    grid: Option<GridChoice>,
    #[arg(long)]
    p_min: Option<f64>,
    #[arg(long)]
    p_max: Option<f64>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    oversampling: Option<f64>,
    /// Family-wise significance level.
    #[arg(long)]
    alpha: Option<f64>,
    /// Number of tests in the Sidak correction.
    #[arg(long)]
    sidak_m: Option<usize>,
    #[arg(long)]
    per_test_alpha: Option<f64>,
    #[arg(long, value_parser = ["auto", "saddlepoint", "imhof", "exact_f", "monte_carlo"])]
    evaluator: Option<String>,
    #[arg(long, default_value_t = 10_000)]
    mc_reps: usize,
    /// Seed of the Monte-Carlo evaluator.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fit the hyperparameters once and reuse them at every period.
    #[arg(long)]
    once_at_peak: bool,
    /// Refine the given number of rough peaks on a fine grid.
    #[arg(long)]
    refine_top: Option<usize>,
    #[arg(long)]
    fine_step: Option<f64>,
    #[arg(long)]
    delimiter: Option<char>,
    /// The input has no accuracy column.
    #[arg(long)]
    no_accuracies: bool,
}

impl ModelArgs {
    fn layer(&self) -> ConfigLayer {
        let evaluator = self.evaluator.as_deref().map(|name| match name {
            "saddlepoint" => Evaluator::Saddlepoint,
            "imhof" => Evaluator::Imhof,
            "exact_f" => Evaluator::ExactF,
            "monte_carlo" => Evaluator::MonteCarlo { reps: self.mc_reps, seed: self.seed },
            _ => Evaluator::Auto,
        });
        ConfigLayer {
            family: self.family,
            statistics: (!self.statistic.is_empty()).then(|| self.statistic.clone()),
            objective: self.objective,
            grid: self.grid,
            p_min: self.p_min,
            p_max: self.p_max,
            step: self.step,
            oversampling: self.oversampling,
            alpha_family: self.alpha,
            sidak_m: self.sidak_m,
            per_test_alpha: self.per_test_alpha,
            evaluator,
            fit_mode: self.once_at_peak.then_some(FitMode::OnceAtPeak),
            refine_top: self.refine_top,
            fine_step: self.fine_step,
            delimiter: self.delimiter,
            accuracies: self.no_accuracies.then_some(false),
            ..Default::default()
        }
    }

    fn resolve(&self) -> Result<RunConfig, Failure> {
        let file = match &self.config {
            Some(path) => io::read_json::<ConfigLayer>(path).map_err(|e| Failure::Usage(format!("config: {e}")))?,
            None => ConfigLayer::default(),
        };
        RunConfig::resolve(self.layer().over(file)).map_err(Failure::Usage)
    }
}

enum Failure {
    Usage(String),
    Input(String),
    Numerical(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Input(_) => 3,
            Failure::Numerical(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Input(m) | Failure::Numerical(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain(_) | Error::Validation(_) => Failure::Usage(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Invalid(inner) => inner.into(),
            other => Failure::Input(other.to_string()),
        }
    }
}

fn input_error(e: IoError) -> Failure {
    Failure::Input(e.to_string())
}

fn pool(threads: Option<usize>) -> Result<Pool, Failure> {
    Pool::new(threads).map_err(|e| Failure::Usage(format!("thread pool: {e}")))
}

fn emit(output: Option<&Path>, contents: &str) -> Result<(), Failure> {
    match output {
        Some(path) => io::write_atomic(path, contents.as_bytes()).map_err(Failure::from),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn csv_string(write: impl FnOnce(&mut Vec<u8>) -> io::Result<()>) -> Result<String, Failure> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

#[derive(Serialize)]
struct StageReport {
    periodogram: Periodogram,
    detection: Detection,
}

#[derive(Serialize)]
struct StatisticReport {
    statistic: Statistic,
    rough: StageReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    refined: Option<StageReport>,
}

#[derive(Serialize)]
struct AnalyzeReport<'a> {
    input: String,
    n: usize,
    config: &'a RunConfig,
    results: Vec<StatisticReport>,
}

fn describe(stat: Statistic, d: &Detection) -> String {
    let name = io::label(&stat).to_uppercase();
    match &d.primary {
        Some(p) => format!("{name}: primary {:.4} (p = {:.3e}), {} extra period(s)", p.period, p.p_value, d.extras.len()),
        None => format!("{name}: no significant period"),
    }
}

fn stage(pg: Periodogram) -> StageReport {
    let detection = detect(&pg);
    StageReport { periodogram: pg, detection }
}

fn failed_entries(pg: &Periodogram) -> usize {
    pg.entries.iter().filter(|e| e.flag == Some(sppgram_core::periodogram::EntryFlag::Failed)).count()
}

fn load(input: &Path, cfg: &RunConfig) -> Result<LightCurve, Failure> {
    io::read_lightcurve(input, &cfg.columns()).map_err(input_error)
}

fn analyze(input: &Path, out_dir: &Path, model: &ModelArgs, threads: Option<usize>) -> Result<(), Failure> {
    let cfg = model.resolve()?;
    let lc = load(input, &cfg)?;
    let grid = cfg.period_grid(&lc)?;
    let exec = pool(threads)?;
    let mut results = Vec::new();
    for &stat in &cfg.statistics {
        let spec = cfg.spec(stat);
        spec.validate(&lc)?;
        let (rough, refined) = match cfg.refine {
            Some((top, fine_step)) => {
                let two = two_stage_search(&lc, &grid, top, fine_step, &spec, &cfg.scan, &exec)?;
                (two.rough, Some(two.refined))
            }
            None => (scan(&lc, &grid, &spec, &cfg.scan, &exec)?, None),
        };
        results.push(StatisticReport { statistic: stat, rough: stage(rough), refined: refined.map(stage) });
    }

    let mut files = Vec::new();
    for r in &results {
        let name = io::label(&r.statistic);
        files.push((format!("periodogram_{name}.csv"), csv_string(|b| io::write_periodogram_csv(b, &r.rough.periodogram))?));
        if let Some(fine) = &r.refined {
            files.push((format!("periodogram_{name}_refined.csv"), csv_string(|b| io::write_periodogram_csv(b, &fine.periodogram))?));
        }
    }
    let report = AnalyzeReport { input: input.display().to_string(), n: lc.n(), config: &cfg, results };
    files.push(("report.json".into(), io::to_json_string(&report)?));
    for (name, contents) in &files {
        io::write_atomic(&out_dir.join(name), contents.as_bytes())?;
    }

    for r in &report.results {
        let failed = failed_entries(&r.rough.periodogram);
        if failed > 0 {
            eprintln!("warning: {failed} trial period(s) failed; see report.json");
        }
        let best = r.refined.as_ref().unwrap_or(&r.rough);
        println!("{}", describe(r.statistic, &best.detection));
    }
    println!("wrote {} file(s) to {}", files.len(), out_dir.display());
    Ok(())
}

fn periodogram(input: &Path, output: Option<&Path>, json: bool, model: &ModelArgs, threads: Option<usize>) -> Result<(), Failure> {
    let cfg = model.resolve()?;
    let [stat] = cfg.statistics[..] else {
        return Err(Failure::Usage("periodogram writes one statistic; use analyze for several".into()));
    };
    let lc = load(input, &cfg)?;
    let grid = cfg.period_grid(&lc)?;
    let spec = cfg.spec(stat);
    spec.validate(&lc)?;
    let pg = scan(&lc, &grid, &spec, &cfg.scan, &pool(threads)?)?;
    let text = if json { io::to_json_string(&pg)? } else { csv_string(|b| io::write_periodogram_csv(b, &pg))? };
    emit(output, &text)
}

fn simulate_cmd(scenario: &Path, output: Option<&Path>, seed: Option<u64>) -> Result<(), Failure> {
    let mut sc: SimScenario = io::read_json(scenario).map_err(input_error)?;
    if let Some(seed) = seed {
        sc.seed = seed;
    }
    let lc = simulate(&sc)?;
    emit(output, &csv_string(|b| io::write_lightcurve_csv(b, &lc))?)
}

fn power_cmd(study: &Path, red_white: bool, output: Option<&Path>, json: bool, threads: Option<usize>) -> Result<(), Failure> {
    let exec = pool(threads)?;
    let text = if red_white {
        let study: RedWhiteStudy = io::read_json(study).map_err(input_error)?;
        let report = red_vs_white_study(&study, &exec)?;
        if json { io::to_json_string(&report)? } else { csv_string(|b| io::write_red_white_csv(b, &report))? }
    } else {
        let study: PowerStudy = io::read_json(study).map_err(input_error)?;
        let report = estimate_power(&study, &exec)?;
        if json { io::to_json_string(&report)? } else { csv_string(|b| io::write_power_csv(b, &report))? }
    };
    emit(output, &text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum QfMethod {
    Saddlepoint,
    Imhof,
    #[serde(alias = "mc")]
    MonteCarlo,
}

fn default_methods() -> Vec<QfMethod> {
    vec![QfMethod::Saddlepoint, QfMethod::Imhof]
}

fn default_reps() -> usize {
    10_000
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PValueRequest {
    lambdas: Vec<f64>,
    #[serde(default)]
    x: f64,
    /// Shorthand for a single entry in `methods`.
    method: Option<QfMethod>,
    #[serde(default = "default_methods")]
    methods: Vec<QfMethod>,
    #[serde(default = "default_reps")]
    reps: usize,
    #[serde(default)]
    seed: u64,
}

#[derive(Serialize)]
struct PValueAnswer {
    method: QfMethod,
    survival: f64,
}

fn pvalue_cmd(input: Option<&Path>) -> Result<(), Failure> {
    let req: PValueRequest = match input.filter(|p| p.as_os_str() != "-") {
        Some(path) => io::read_json(path).map_err(input_error)?,
        None => {
            let mut text = String::new();
            std::io::stdin().read_to_string(&mut text).map_err(|e| Failure::Input(e.to_string()))?;
            serde_json::from_str(&text).map_err(|e| Failure::Input(format!("request: {e}")))?
        }
    };
    let spec = QuadFormSpec::new(req.lambdas)?;
    let mut answers = Vec::new();
    let methods = req.method.map_or(req.methods, |m| vec![m]);
    for method in methods {
        let survival = match method {
            QfMethod::Saddlepoint => saddlepoint_survival(&spec, req.x)?.survival,
            QfMethod::Imhof => imhof_survival(&spec, req.x)?,
            QfMethod::MonteCarlo => mc_survival(&spec, req.x, req.reps, req.seed)?,
        };
        answers.push(PValueAnswer { method, survival });
    }
    emit(None, &io::to_json_string(&answers)?)
}

fn selftest_cmd(quick: bool, fault: Fault) -> Result<(), Failure> {
    let report = run_selftest(quick, fault)?;
    for c in &report.checks {
        println!("{:4} {:32} {}", if c.passed { "ok" } else { "FAIL" }, c.name, c.detail);
    }
    match report.failures().map(|c| c.name.as_str()).collect::<Vec<_>>() {
        failed if failed.is_empty() => Ok(()),
        failed => Err(Failure::Numerical(format!("self-test failed: {}", failed.join(", ")))),
    }
}

fn bench_cmd(n: usize, reps: usize, seed: u64, output: Option<&Path>) -> Result<(), Failure> {
    let table = timing_benchmark(n, reps, seed)?;
    println!("{reps} tests at n = {n}");
    println!("{:6} {:12} {:>10} {:>12}", "model", "method", "seconds", "vs saddle");
    for r in &table.rows {
        println!("{:6} {:12} {:>10.4} {:>11.1}x", r.model, io::label(&r.method), r.seconds, r.ratio_to_saddlepoint);
    }
    match output {
        Some(path) => io::write_atomic(path, io::to_json_string(&table)?.as_bytes()).map_err(Failure::from),
        None => Ok(()),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let threads = cli.threads;
    match &cli.command {
        Command::Analyze { input, out_dir, model } => analyze(input, out_dir, model, threads),
        Command::Periodogram { input, output, json, model } => periodogram(input, output.as_deref(), *json, model, threads),
        Command::Simulate { scenario, output, seed } => simulate_cmd(scenario, output.as_deref(), *seed),
        Command::Power { study, red_white, output, json } => power_cmd(study, *red_white, output.as_deref(), *json, threads),
        Command::Pvalue { input } => pvalue_cmd(input.as_deref()),
        Command::Selftest { quick, inject_fault } => selftest_cmd(*quick, *inject_fault),
        Command::Bench { n, reps, seed, output } => bench_cmd(*n, *reps, *seed, output.as_deref()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
