//! Command-line front end: scenario loading, subcommand dispatch, reports.
//!
//! Exit codes: 0 success, 1 search found no schedulable frequency, 2 input
//! error, 3 brute-force cap exceeded.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::analysis::{compare_modes, energy_metrics, grid_range, rm_utilization_check, AnalysisError, CompareOptions, EnergyParams};
use crate::report::{trace_report, Report};
use crate::search::{min_frequency_search, Family, SearchError, SearchOptions, StartPoint};
use crate::simcore::{brute_force_simulate, simulate, ExecutionMode, SimError};
use crate::slowdown::{distortion_metrics, interval_fractions, modeled_frequency, SlowdownConfig, SlowdownError};
use crate::workload::gen::{generate_workload, GenConfig};
use crate::workload::{validate, Issue, Tick, Workload, WorkloadError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_UNSCHEDULABLE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_CAP: i32 = 3;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunOptions {
    pub horizon: Option<Tick>,
    pub seed: Option<u64>,
    pub repeats: Option<u32>,
}

/// A workload plus optional slowdown schedule, energy model and run options.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub workload: Workload,
    pub slowdown: Option<SlowdownConfig>,
    pub energy: Option<EnergyParams<f64>>,
    pub options: RunOptions,
}

const SCENARIO_KEYS: &[&str] = &["tasks", "horizon", "seed", "slowdown", "energy", "options"];

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Cap(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Cap(_) => EXIT_CAP,
        }
    }
}

impl From<WorkloadError> for CliError {
    fn from(e: WorkloadError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::CapExceeded { .. } => CliError::Cap(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<SearchError> for CliError {
    fn from(e: SearchError) -> Self {
        match e {
            SearchError::Sim(s) => s.into(),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Search(s) => s.into(),
            AnalysisError::Sim(s) => s.into(),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<SlowdownError> for CliError {
    fn from(e: SlowdownError) -> Self {
        CliError::Input(e.to_string())
    }
}

fn split_scenario(text: &str) -> Result<(Value, Value), CliError> {
    let doc: Value = serde_json::from_str(text).map_err(WorkloadError::from)?;
    let Value::Object(map) = doc else {
        return Err(CliError::Input("scenario must be a JSON object".into()));
    };
    if let Some(key) = map.keys().find(|k| !SCENARIO_KEYS.contains(&k.as_str())) {
        return Err(CliError::Input(format!(
            "unknown scenario key `{key}` (expected one of {})",
            SCENARIO_KEYS.join(", ")
        )));
    }
    let mut workload = serde_json::Map::new();
    let mut rest = serde_json::Map::new();
    for (k, v) in map {
        if ["tasks", "horizon", "seed"].contains(&k.as_str()) {
            workload.insert(k, v);
        } else {
            rest.insert(k, v);
        }
    }
    Ok((Value::Object(workload), Value::Object(rest)))
}

fn field<T: serde::de::DeserializeOwned>(rest: &Value, key: &str) -> Result<Option<T>, CliError> {
    match rest.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => serde_json::from_value(v.clone())
            .map(Some)
            .map_err(|e| CliError::Input(format!("{key}: {e}"))),
    }
}

/// Parses a scenario document without validating the workload.
fn parse_scenario_raw(text: &str) -> Result<Scenario, CliError> {
    let (workload, rest) = split_scenario(text)?;
    let workload: Workload =
        serde_json::from_value(workload).map_err(|e| CliError::Input(format!("workload: {e}")))?;
    Ok(Scenario {
        workload,
        slowdown: field(&rest, "slowdown")?,
        energy: field(&rest, "energy")?,
        options: field(&rest, "options")?.unwrap_or_default(),
    })
}

/// Parses and validates a scenario, applying the file's own run options.
pub fn parse_scenario(text: &str) -> Result<Scenario, CliError> {
    let mut scenario = parse_scenario_raw(text)?;
    if let Some(h) = scenario.options.horizon {
        scenario.workload.horizon = h;
    }
    if let Some(s) = scenario.options.seed {
        scenario.workload.seed = s;
    }
    check_scenario(&scenario)?;
    Ok(scenario)
}

fn check_scenario(scenario: &Scenario) -> Result<(), CliError> {
    let report = validate(&scenario.workload);
    if !report.is_ok() {
        return Err(WorkloadError::Semantic(report.errors).into());
    }
    if let Some(config) = &scenario.slowdown {
        config.check_against(&scenario.workload)?;
    }
    if let Some(energy) = &scenario.energy {
        energy.check().map_err(|e| CliError::Input(e.to_string()))?;
    }
    Ok(())
}

#[derive(Debug, Parser)]
#[command(name = "freqsim", version, about = "Minimum schedulable frequency estimation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    /// Scenario JSON file.
    #[arg(long)]
    pub scenario: PathBuf,
    /// Override the simulation horizon.
    #[arg(long)]
    pub horizon: Option<Tick>,
    /// Override the arrival seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one execution mode.
    Simulate {
        #[command(flatten)]
        common: ScenarioArgs,
        /// baseline | true:PHI | slowdown (uses the scenario's `slowdown`).
        #[arg(long, default_value = "baseline")]
        mode: String,
        /// Include routine cycles and run-length-encoded tick attribution.
        #[arg(long)]
        trace: bool,
        /// Cross-check against the tick-by-tick reference simulator.
        #[arg(long)]
        check: bool,
    },
    /// Bisect for the minimum schedulable frequency fraction.
    Search {
        #[command(flatten)]
        common: ScenarioArgs,
        /// true | slowdown
        #[arg(long, default_value = "true")]
        family: String,
        #[arg(long, default_value_t = 0.01)]
        tol: f64,
        /// PHI | auto (baseline utilization) | half
        #[arg(long, default_value = "auto")]
        start: String,
        #[arg(long)]
        repeats: Option<u32>,
        #[arg(long, default_value_t = 16)]
        max_cycle: Tick,
        #[arg(long, default_value_t = 1)]
        burst_scale: Tick,
    },
    /// Compare true scaling, slowdown approximation and the naive estimate.
    Compare {
        #[command(flatten)]
        common: ScenarioArgs,
        /// LO:HI:STEP
        #[arg(long, default_value = "0.1:1:0.1")]
        grid: String,
        #[arg(long, default_value_t = 0.01)]
        tol: f64,
        #[arg(long, default_value_t = 16)]
        max_cycle: Tick,
        #[arg(long, default_value_t = 1)]
        burst_scale: Tick,
    },
    /// Approximation-quality metrics for the scenario's slowdown schedule.
    Distort {
        #[command(flatten)]
        common: ScenarioArgs,
        #[arg(long)]
        window: Tick,
    },
    /// Validate a scenario file.
    Validate {
        #[command(flatten)]
        common: ScenarioArgs,
    },
    /// Generate a synthetic rate-monotonic scenario.
    Gen {
        #[arg(long)]
        tasks: usize,
        #[arg(long)]
        util: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        waits: bool,
        #[arg(long, default_value_t = 2)]
        hyperperiods: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

struct Output {
    text: String,
    summary: String,
    out: Option<PathBuf>,
    code: i32,
}

/// Reads and parses the scenario and applies `--horizon`/`--seed`, without
/// validating the workload.
fn load_unchecked(common: &ScenarioArgs) -> Result<Scenario, CliError> {
    let text = fs::read_to_string(&common.scenario)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", common.scenario.display())))?;
    let mut scenario = parse_scenario_raw(&text)?;
    let conflict = |what: &str, file: String, flag: String| {
        CliError::Input(format!(
            "conflicting overrides: --{what} {flag} vs options.{what} {file} in the scenario"
        ))
    };
    match (scenario.options.horizon, common.horizon) {
        (Some(a), Some(b)) if a != b => return Err(conflict("horizon", a.to_string(), b.to_string())),
        (a, b) => {
            if let Some(h) = b.or(a) {
                scenario.workload.horizon = h;
            }
        }
    }
    match (scenario.options.seed, common.seed) {
        (Some(a), Some(b)) if a != b => return Err(conflict("seed", a.to_string(), b.to_string())),
        (a, b) => {
            if let Some(s) = b.or(a) {
                scenario.workload.seed = s;
            }
        }
    }
    Ok(scenario)
}

fn load(common: &ScenarioArgs) -> Result<Scenario, CliError> {
    let scenario = load_unchecked(common)?;
    check_scenario(&scenario)?;
    Ok(scenario)
}

fn parse_mode(text: &str, scenario: &Scenario) -> Result<ExecutionMode<f64>, CliError> {
    match text {
        "baseline" => Ok(ExecutionMode::Baseline),
        "slowdown" => scenario
            .slowdown
            .clone()
            .map(|config| ExecutionMode::Slowdown { config })
            .ok_or_else(|| CliError::Input("--mode slowdown needs a `slowdown` key in the scenario".into())),
        other => {
            let phi = other
                .strip_prefix("true:")
                .and_then(|p| p.parse::<f64>().ok())
                .ok_or_else(|| CliError::Input(format!("unknown mode `{other}`; use baseline, true:PHI or slowdown")))?;
            if !(phi > 0.0 && phi <= 1.0) {
                return Err(CliError::Input(format!("true:PHI needs 0 < PHI <= 1, got {phi}")));
            }
            Ok(ExecutionMode::TrueScaling { phi })
        }
    }
}

fn parse_grid(text: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<f64> = text
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Input(format!("--grid expects LO:HI:STEP, got `{text}`")))?;
    let [lo, hi, step] = parts[..] else {
        return Err(CliError::Input(format!("--grid expects LO:HI:STEP, got `{text}`")));
    };
    if !(lo > 0.0 && hi <= 1.0 && lo <= hi && step > 0.0) {
        return Err(CliError::Input(format!(
            "--grid needs 0 < LO <= HI <= 1 and STEP > 0, got `{text}`"
        )));
    }
    Ok(grid_range(lo, hi, step))
}

fn energy_params(scenario: &Scenario) -> EnergyParams<f64> {
    scenario.energy.clone().unwrap_or_default()
}

fn cmd_simulate(common: &ScenarioArgs, mode: &str, full: bool, check: bool) -> Result<Output, CliError> {
    let scenario = load(common)?;
    let mode = parse_mode(mode, &scenario)?;
    let trace = simulate(&scenario.workload, &mode)?;
    if check {
        let reference = brute_force_simulate(&scenario.workload, &mode)?;
        if reference != trace {
            return Err(CliError::Input(
                "internal error: event-driven and tick-by-tick simulations disagree".into(),
            ));
        }
    }
    let phi = match &mode {
        ExecutionMode::Slowdown { config } => modeled_frequency(config.default, 1.0),
        m => m.compute_phi(),
    };
    let energy = energy_metrics(&trace, phi, &energy_params(&scenario)).ok();
    let warnings: Vec<Issue> = scenario.slowdown.as_ref().map(|c| c.warnings()).unwrap_or_default();
    let body = json!({
        "trace": trace_report(&trace, full),
        "energy": energy,
        "slowdown_warnings": if matches!(mode, ExecutionMode::Slowdown { .. }) { warnings } else { Vec::new() },
        "oracle_checked": check,
    });
    let summary = format!(
        "{}: {} jobs, {} missed, schedulable = {}",
        mode.label(),
        trace.jobs.len(),
        trace.miss_count(),
        trace.miss_count() == 0
    );
    Ok(Output {
        text: Report::new("simulate", Some(trace.fingerprint.clone()), body).to_json(),
        summary,
        out: common.out.clone(),
        code: EXIT_OK,
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_search(
    common: &ScenarioArgs,
    family: &str,
    tol: f64,
    start: &str,
    repeats: Option<u32>,
    max_cycle: Tick,
    burst_scale: Tick,
) -> Result<Output, CliError> {
    let scenario = load(common)?;
    let family = match family {
        "true" => Family::TrueScaling,
        "slowdown" => Family::Slowdown {
            max_cycle,
            burst_scale,
        },
        other => return Err(CliError::Input(format!("unknown family `{other}`; use true or slowdown"))),
    };
    let start = match start {
        "auto" => StartPoint::Auto,
        "half" => StartPoint::Half,
        other => StartPoint::Fixed(
            other
                .parse::<f64>()
                .map_err(|_| CliError::Input(format!("--start expects PHI, auto or half, got `{other}`")))?,
        ),
    };
    let repeats = repeats.or(scenario.options.repeats).unwrap_or(1);
    let options = SearchOptions {
        family,
        tolerance: tol,
        start,
        repeats,
    };
    let result = min_frequency_search(&scenario.workload, &options)?;
    let (code, summary) = match result.min_phi {
        Some(phi) => (EXIT_OK, format!("minimum schedulable frequency fraction: {phi} ({} probes)", result.probes.len())),
        None => (EXIT_UNSCHEDULABLE, "unschedulable within range (fails at nominal frequency)".to_string()),
    };
    let body = json!({
        "search": result,
        "repeats": repeats,
        "label": if result.assumes_monotonicity { "estimate under monotonicity assumption" } else { "exact on the probe grid" },
    });
    Ok(Output {
        text: Report::new("search", Some(scenario.workload.fingerprint()), body).to_json(),
        summary,
        out: common.out.clone(),
        code,
    })
}

fn cmd_compare(common: &ScenarioArgs, grid: &str, tol: f64, max_cycle: Tick, burst_scale: Tick) -> Result<Output, CliError> {
    let scenario = load(common)?;
    let grid = parse_grid(grid)?;
    let options = CompareOptions {
        max_cycle,
        burst_scale,
        tolerance: tol,
    };
    let report = compare_modes(&scenario.workload, &grid, &options)?;
    let params = energy_params(&scenario);
    let mut energy = Vec::new();
    let mut rm = Vec::new();
    for &phi in &report.grid {
        let trace = simulate(&scenario.workload, &Family::TrueScaling.mode_for(phi)?)?;
        energy.push(energy_metrics(&trace, phi, &params).ok());
        rm.push(json!({ "phi": phi, "check": rm_utilization_check(&scenario.workload, phi) }));
    }
    let distortion: Vec<Value> = report
        .verdicts
        .iter()
        .map(|g| json!({ "phi": g.phi, "params": g.params, "metrics": g.distortion }))
        .collect();
    let summary = format!(
        "min phi: true {:?}, slowdown {:?}, naive {}; {} divergence(s)",
        report.min_phi_true,
        report.min_phi_slowdown,
        report.min_phi_naive,
        report.divergences.len()
    );
    let body = json!({
        "grid": report.grid,
        "verdicts": report.verdicts,
        "min_phi": {
            "true": report.min_phi_true,
            "slowdown": report.min_phi_slowdown,
            "naive": report.min_phi_naive,
        },
        "divergences": report.divergences,
        "distortion": distortion,
        "energy": energy,
        "rm": rm,
        "assumes_monotonicity": report.assumes_monotonicity,
        "options": options,
    });
    Ok(Output {
        text: Report::new("compare", Some(scenario.workload.fingerprint()), body).to_json(),
        summary,
        out: common.out.clone(),
        code: EXIT_OK,
    })
}

fn cmd_distort(common: &ScenarioArgs, window: Tick) -> Result<Output, CliError> {
    let scenario = load(common)?;
    let config = scenario
        .slowdown
        .clone()
        .ok_or_else(|| CliError::Input("distort needs a `slowdown` key in the scenario".into()))?;
    let warnings = config.warnings();
    let trace = simulate(&scenario.workload, &ExecutionMode::<f64>::Slowdown { config })?;
    let metrics = distortion_metrics(&trace, window)?;
    let intervals = interval_fractions(&trace)?;
    let summary = format!(
        "coverage10 {:.3}, escaped {:.3}, variation {:.4}",
        metrics.coverage10, metrics.escaped, metrics.variation
    );
    let body = json!({
        "distortion": metrics,
        "intervals": intervals,
        "warnings": warnings,
    });
    Ok(Output {
        text: Report::new("distort", Some(trace.fingerprint.clone()), body).to_json(),
        summary,
        out: common.out.clone(),
        code: EXIT_OK,
    })
}

fn cmd_validate(common: &ScenarioArgs) -> Result<Output, CliError> {
    let scenario = load_unchecked(common)?;
    let mut report = validate(&scenario.workload);
    if let Some(config) = &scenario.slowdown {
        if let Err(e) = config.check_against(&scenario.workload) {
            report.errors.push(Issue {
                field: "slowdown".into(),
                message: e.to_string(),
            });
        }
        report.warnings.extend(config.warnings().into_iter().map(|mut i| {
            i.field = format!("slowdown.{}", i.field);
            i
        }));
    }
    if let Some(energy) = &scenario.energy {
        if let Err(e) = energy.check() {
            report.errors.push(Issue {
                field: "energy".into(),
                message: e.to_string(),
            });
        }
    }
    let code = if report.is_ok() { EXIT_OK } else { EXIT_INPUT };
    let summary = format!("{} error(s), {} warning(s)", report.errors.len(), report.warnings.len());
    Ok(Output {
        text: Report::new("validate", Some(scenario.workload.fingerprint()), report).to_json(),
        summary,
        out: common.out.clone(),
        code,
    })
}

fn cmd_gen(tasks: usize, util: f64, seed: u64, waits: bool, hyperperiods: u64, out: Option<PathBuf>) -> Result<Output, CliError> {
    if tasks == 0 {
        return Err(CliError::Input("--tasks must be at least 1".into()));
    }
    if !(util > 0.0 && util.is_finite()) {
        return Err(CliError::Input(format!("--util must be positive, got {util}")));
    }
    let mut cfg = GenConfig::new(tasks, util, seed);
    cfg.with_waits = waits;
    cfg.hyperperiods = hyperperiods;
    let workload = generate_workload(&cfg);
    let mut doc = serde_json::to_value(&workload).expect("workload serializes");
    doc["slowdown"] = json!({ "default": { "execute": 1, "sleep": 3 } });
    let mut text = serde_json::to_string_pretty(&doc).expect("json");
    text.push('\n');
    Ok(Output {
        text,
        summary: format!(
            "generated {} tasks, nominal utilization {:.3}, horizon {}",
            workload.tasks.len(),
            workload.nominal_utilization(),
            workload.horizon
        ),
        out,
        code: EXIT_OK,
    })
}

fn dispatch(cli: Cli) -> Result<Output, CliError> {
    match cli.command {
        Command::Simulate {
            common,
            mode,
            trace,
            check,
        } => cmd_simulate(&common, &mode, trace, check),
        Command::Search {
            common,
            family,
            tol,
            start,
            repeats,
            max_cycle,
            burst_scale,
        } => cmd_search(&common, &family, tol, &start, repeats, max_cycle, burst_scale),
        Command::Compare {
            common,
            grid,
            tol,
            max_cycle,
            burst_scale,
        } => cmd_compare(&common, &grid, tol, max_cycle, burst_scale),
        Command::Distort { common, window } => cmd_distort(&common, window),
        Command::Validate { common } => cmd_validate(&common),
        Command::Gen {
            tasks,
            util,
            seed,
            waits,
            hyperperiods,
            out,
        } => cmd_gen(tasks, util, seed, waits, hyperperiods, out),
    }
}

/// Runs one invocation; `argv[0]` is the program name. Returns the exit code.
pub fn run_command<I, S>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let rendered = e.render().to_string();
            if code == EXIT_OK {
                let _ = write!(stdout, "{rendered}");
            } else {
                let _ = write!(stderr, "{rendered}");
            }
            return code;
        }
    };
    match dispatch(cli) {
        Ok(output) => {
            match &output.out {
                Some(path) => {
                    if let Err(e) = fs::write(path, &output.text) {
                        let _ = writeln!(stderr, "error: cannot write {}: {e}", path.display());
                        return EXIT_INPUT;
                    }
                }
                None => {
                    let _ = stdout.write_all(output.text.as_bytes());
                }
            }
            let _ = writeln!(stderr, "{}", output.summary);
            output.code
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
