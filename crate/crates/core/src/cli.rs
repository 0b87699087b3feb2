//! `locpred` command line: `run`, `sweep`, `fit` and `cost`.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 numeric failure,
//! 1 for I/O failures while writing results.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::detect::{fit_series, ClassifierSettings, FitResult, FitWindow};
use crate::error::Error;
use crate::evolve::TimeGrid;
use crate::experiment::{
    run_experiment, ConservationReport, ExperimentConfig, Mode, TrajectoryRecord,
    MAX_EXPERIMENT_SITES,
};
use crate::hamiltonian::{Boundary, ChainParams};
use crate::quantifiers::{measurement_cost, Quantity};
use crate::states::InitialState;

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;
pub const CSV_HEADER: [&str; 7] = ["t", "C_mean", "C_sem", "P_mean", "P_sem", "E_mean", "E_sem"];

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "locpred", version, about = "Disordered fermion chain quench dynamics and l1 complementarity quantifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one disorder-averaged experiment.
    Run(RunArgs),
    /// Run every (W, g) cell listed under the config's "sweep" key.
    Sweep(RunArgs),
    /// Fit y = a - b log10(t) to a trajectory CSV column and classify it.
    Fit(FitArgs),
    /// Number of observables needed to estimate a quantifier on N qubits.
    Cost(CostArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// JSON config file (or a manifest written by a previous run).
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Worker threads for the realization loop.
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides the config's master_seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct FitArgs {
    csv: PathBuf,
    #[arg(long, default_value = "P")]
    quantity: Quantity,
    /// Defaults to a tenth of the last time in the file.
    #[arg(long)]
    window_low: Option<f64>,
    /// Defaults to the last time in the file.
    #[arg(long)]
    window_high: Option<f64>,
    #[arg(long, default_value_t = ClassifierSettings::default().abs_tol)]
    abs_tol: f64,
    #[arg(long, default_value_t = ClassifierSettings::default().significance)]
    sig: f64,
}

#[derive(Debug, Args)]
struct CostArgs {
    n_sites: usize,
    #[arg(long, default_value = "P")]
    quantity: Quantity,
}

/// Failure of a subcommand, carrying its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        CliError {
            code: EXIT_IO,
            message: format!("{}: {err}", path.display()),
        }
    }
}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        let code = match err {
            Error::InvalidArgument(_) | Error::Unsupported(_) => EXIT_USAGE,
            Error::Numeric(_) | Error::Logic(_) => EXIT_NUMERIC,
        };
        CliError {
            code,
            message: err.to_string(),
        }
    }
}

/// Entry point shared by the binary and the tests; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Run(args) => cmd_run(&args),
        Command::Sweep(args) => cmd_sweep(&args),
        Command::Fit(args) => cmd_fit(&args),
        Command::Cost(args) => cmd_cost(&args),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

/// On-disk experiment configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub n_sites: usize,
    #[serde(rename = "J")]
    pub hopping: f64,
    #[serde(rename = "W")]
    pub disorder: f64,
    #[serde(rename = "g")]
    pub interaction: f64,
    #[serde(default)]
    pub boundary: Boundary,
    pub initial_state: InitialState,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub grid: TimeGrid,
    pub realizations: usize,
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(rename = "W")]
    pub disorder: Vec<f64>,
    #[serde(rename = "g")]
    pub interaction: Vec<f64>,
}

impl ConfigFile {
    pub fn experiment(&self) -> ExperimentConfig {
        ExperimentConfig {
            chain: ChainParams {
                n_sites: self.n_sites,
                hopping: self.hopping,
                disorder: self.disorder,
                interaction: self.interaction,
                boundary: self.boundary,
            },
            initial_state: self.initial_state,
            mode: self.mode,
            grid: self.grid.clone(),
            realizations: self.realizations,
            master_seed: self.master_seed,
        }
    }

    /// Field-level checks, reported with the line the field appears on.
    fn check(&self, text: &str) -> Result<(), CliError> {
        let fail = |field: &str, msg: String| {
            let at = locate_key(text, field)
                .map(|l| format!("line {l}: "))
                .unwrap_or_default();
            Err(CliError::usage(format!("config {at}`{field}`: {msg}")))
        };
        if self.n_sites < 2 || self.n_sites > MAX_EXPERIMENT_SITES {
            return fail(
                "n_sites",
                format!("must lie in 2..={MAX_EXPERIMENT_SITES}, got {}", self.n_sites),
            );
        }
        if let Err(e) = self.initial_state.validate(self.n_sites) {
            return fail("initial_state", e.to_string());
        }
        if let Mode::Local(w) = self.mode {
            if w == 0 || w > self.n_sites {
                return fail("mode", format!("local window {w} must lie in 1..={}", self.n_sites));
            }
        }
        if self.realizations == 0 {
            return fail("realizations", "must be at least 1".into());
        }
        if let Some(sweep) = &self.sweep {
            if sweep.disorder.is_empty() || sweep.interaction.is_empty() {
                return fail("sweep", "W and g lists must both be nonempty".into());
            }
        }
        self.experiment().validate().map_err(CliError::from)
    }
}

/// 1-based line of the first `"key"` in `text`.
fn locate_key(text: &str, key: &str) -> Option<usize> {
    let needle = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&needle)).map(|i| i + 1)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Standalone config reproducing this output (sweep cells are expanded).
    pub config: ConfigFile,
    pub master_seed: u64,
    pub realization_seeds: Vec<u64>,
    pub threads: Option<usize>,
    pub parallel: bool,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    pub warnings: Vec<String>,
    pub conservation: ConservationReport,
    pub trajectory_csv: String,
}

fn load_config(path: &Path) -> Result<(ConfigFile, String), CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    // a manifest carries its reproducible config under "config"
    let is_manifest = value.get("schema_version").is_some() && value.get("config").is_some();
    let config: ConfigFile = if is_manifest {
        serde_json::from_value(value["config"].clone())
            .map_err(|e| CliError::usage(format!("{}: manifest config: {e}", path.display())))?
    } else {
        serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?
    };
    config.check(&text)?;
    Ok((config, text))
}

fn unix_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

fn with_threads<T: Send>(
    threads: Option<usize>,
    job: impl FnOnce() -> T + Send,
) -> Result<T, CliError> {
    match threads {
        Some(0) => Err(CliError::usage("--threads must be at least 1")),
        #[cfg(feature = "parallel")]
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::usage(format!("cannot start {n} threads: {e}")))?;
            Ok(pool.install(job))
        }
        _ => Ok(job()),
    }
}

pub fn trajectory_csv(record: &TrajectoryRecord) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for (i, t) in record.times.iter().enumerate() {
        let row = [
            *t,
            record.coherence[i].mean,
            record.coherence[i].sem,
            record.predictability[i].mean,
            record.predictability[i].sem,
            record.entanglement[i].mean,
            record.entanglement[i].sem,
        ];
        w.write_record(row.iter().map(f64::to_string))?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is ASCII"))
}

fn write_outputs(
    out_dir: &Path,
    suffix: &str,
    command: &str,
    config: ConfigFile,
    record: &TrajectoryRecord,
    threads: Option<usize>,
    started: u128,
) -> Result<(), CliError> {
    fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let csv_name = format!("trajectory{suffix}.csv");
    let csv_path = out_dir.join(&csv_name);
    let csv = trajectory_csv(record).map_err(|e| CliError::io(&csv_path, e))?;
    fs::write(&csv_path, csv).map_err(|e| CliError::io(&csv_path, e))?;

    let manifest = RunManifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: command.into(),
        master_seed: config.master_seed,
        config,
        realization_seeds: record.seeds.clone(),
        threads,
        parallel: cfg!(feature = "parallel"),
        started_unix_ms: started,
        finished_unix_ms: unix_ms(),
        warnings: record.warnings.clone(),
        conservation: record.conservation,
        trajectory_csv: csv_name,
    };
    let manifest_path = out_dir.join(format!("manifest{suffix}.json"));
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&manifest_path, json + "\n").map_err(|e| CliError::io(&manifest_path, e))
}

fn cmd_run(args: &RunArgs) -> Result<(), CliError> {
    let started = unix_ms();
    let (mut config, _) = load_config(&args.config)?;
    if let Some(seed) = args.seed {
        config.master_seed = seed;
    }
    if config.sweep.take().is_some() {
        eprintln!("warning: ignoring the \"sweep\" key; use `locpred sweep` to run it");
    }
    let experiment = config.experiment();
    let record = with_threads(args.threads, || run_experiment(&experiment))??;
    for w in &record.warnings {
        eprintln!("warning: {w}");
    }
    write_outputs(&args.out_dir, "", "run", config, &record, args.threads, started)
}

/// Filename suffix of a sweep cell, e.g. `_W2_g0.5`.
pub fn cell_suffix(disorder: f64, interaction: f64) -> String {
    format!("_W{disorder}_g{interaction}")
}

fn cmd_sweep(args: &RunArgs) -> Result<(), CliError> {
    let (mut config, text) = load_config(&args.config)?;
    if let Some(seed) = args.seed {
        config.master_seed = seed;
    }
    let sweep = config.sweep.take().ok_or_else(|| {
        CliError::usage(format!(
            "{}: sweep needs a \"sweep\": {{\"W\": [...], \"g\": [...]}} entry",
            args.config.display()
        ))
    })?;
    // validate every cell before running any
    let mut cells = Vec::new();
    for &w in &sweep.disorder {
        for &g in &sweep.interaction {
            let mut cell = config.clone();
            cell.disorder = w;
            cell.interaction = g;
            cell.check(&text)?;
            cells.push(cell);
        }
    }
    for cell in cells {
        let started = unix_ms();
        let experiment = cell.experiment();
        let record = with_threads(args.threads, || run_experiment(&experiment))??;
        let suffix = cell_suffix(cell.disorder, cell.interaction);
        write_outputs(&args.out_dir, &suffix, "sweep", cell, &record, args.threads, started)?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct FitOutput {
    quantity: Quantity,
    window: FitWindow,
    #[serde(flatten)]
    fit: FitResult,
}

/// Reads `t` and `<quantity>_mean` columns from a trajectory CSV.
pub fn read_trajectory_column(
    path: &Path,
    quantity: Quantity,
) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?
        .clone();
    let column = |name: &str| {
        headers.iter().position(|h| h.trim() == name).ok_or_else(|| {
            CliError::usage(format!("{}: missing column {name:?}", path.display()))
        })
    };
    let t_col = column("t")?;
    let y_name = format!("{}_mean", quantity.symbol());
    let y_col = column(&y_name)?;
    let (mut times, mut values) = (Vec::new(), Vec::new());
    for (line, row) in reader.records().enumerate() {
        let row = row.map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        let parse = |col: usize| -> Result<f64, CliError> {
            let field = row.get(col).unwrap_or("");
            field.trim().parse().map_err(|_| {
                CliError::usage(format!(
                    "{}: line {}: cannot parse {field:?} as a number",
                    path.display(),
                    line + 2
                ))
            })
        };
        times.push(parse(t_col)?);
        values.push(parse(y_col)?);
    }
    Ok((times, values))
}

fn cmd_fit(args: &FitArgs) -> Result<(), CliError> {
    let (times, values) = read_trajectory_column(&args.csv, args.quantity)?;
    let default = FitWindow::last_decade(&times)?;
    let window = FitWindow::new(
        args.window_low.unwrap_or(default.t_low),
        args.window_high.unwrap_or(default.t_high),
    )?;
    let settings = ClassifierSettings {
        abs_tol: args.abs_tol,
        significance: args.sig,
    };
    let fit = fit_series(&times, &values, window, &settings)?;
    let out = FitOutput {
        quantity: args.quantity,
        window,
        fit,
    };
    println!("{}", serde_json::to_string_pretty(&out).expect("fit serializes"));
    Ok(())
}

fn cmd_cost(args: &CostArgs) -> Result<(), CliError> {
    println!("{}", measurement_cost(args.n_sites, args.quantity)?);
    Ok(())
}
