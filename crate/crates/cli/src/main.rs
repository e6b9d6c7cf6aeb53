//! `tesopt`: synthesize or ingest data, tune and run the load forecaster,
//! plan and simulate ice dispatch, and compare control scenarios.

mod commands;
mod error;
mod manifest;
mod suggest;

use std::path::PathBuf;
use std::process::ExitCode;

use chrono::{NaiveDate, NaiveDateTime};
use clap::{Args, Parser, Subcommand, ValueEnum};
use tesopt::scenario::ScenarioKind;

use error::{CliError, Exit};

#[derive(Debug, Parser)]
#[command(
    name = "tesopt",
    version,
    about = "Cooling-load forecasting and ice-storage dispatch"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic season data directory from a season config.
    Synth(SynthArgs),
    /// Validate raw load and weather files and write a clean data directory.
    Ingest(IngestArgs),
    /// Select the feature mask and model hyperparameters by cross-validation.
    Tune(TuneArgs),
    /// Issue day-ahead (and mid-day) forecasts over the evaluation range.
    Predict(PredictArgs),
    /// Plan one day's ice/chiller decisions from a prediction file.
    Plan(PlanArgs),
    /// Run control scenarios over the evaluation range.
    Simulate(SimulateArgs),
    /// Compare simulated scenarios against the fixed baseline and write the report.
    Compare(CompareArgs),
    /// Suggest the plan for the rest of today from a live state file.
    Suggest(SuggestArgs),
}

#[derive(Debug, Args)]
struct ConfigArg {
    /// Season config (JSON); it names the pipeline, plant and tariff files.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Overrides the generator seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct IngestArgs {
    /// Directory with `bas.csv` or `loads.csv`, `weather.csv` and optionally
    /// `forecast_weather.csv` and `holidays.txt`.
    #[arg(long, value_name = "DIR")]
    data: PathBuf,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Keep only this building's rows.
    #[arg(long, conflicts_with = "total")]
    building: Option<String>,
    /// Sum all buildings per hour.
    #[arg(long)]
    total: bool,
}

#[derive(Debug, Args)]
struct TuneArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long, value_name = "DIR")]
    data: PathBuf,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Day whose training window is used; the evaluation start by default.
    #[arg(long)]
    date: Option<NaiveDate>,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long, value_name = "DIR")]
    data: PathBuf,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Forecast variant: day-ahead, mid-day6 or mid-day24.
    #[arg(long, default_value = "day-ahead")]
    scenario: ScenarioKind,
}

#[derive(Debug, Args)]
struct PlanArgs {
    #[command(flatten)]
    config: ConfigArg,
    /// Prediction CSV written by `predict`.
    #[arg(long, value_name = "PATH")]
    predictions: PathBuf,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Day to plan; the first day in the file by default.
    #[arg(long)]
    date: Option<NaiveDate>,
    /// Tariff month; the month of the planned day by default.
    #[arg(long)]
    month: Option<u32>,
    /// Stored ice at the first daytime hour, kWh; a full tank by default.
    #[arg(long)]
    ice: Option<f64>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long, value_name = "DIR")]
    data: PathBuf,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Scenario to run (repeatable); all four by default.
    #[arg(long)]
    scenario: Vec<ScenarioKind>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportKind {
    /// Tables, per-day CSVs and SVG plots.
    Full,
    /// Tables and per-day CSVs only.
    Tables,
}

#[derive(Debug, Args)]
struct CompareArgs {
    /// Directory of scenario results written by `simulate`.
    #[arg(long, value_name = "DIR")]
    data: PathBuf,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "full")]
    format: ReportKind,
}

#[derive(Debug, Args)]
struct SuggestArgs {
    #[command(flatten)]
    config: ConfigArg,
    /// History data directory (loads before today, weather, holidays).
    #[arg(long, value_name = "DIR")]
    data: PathBuf,
    /// Plant state JSON: timestamp, hour, ice_kwh, observed_loads_kw, prior_plan.
    #[arg(long, value_name = "PATH")]
    state: PathBuf,
    /// Also write the suggestion and a manifest here.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Control variant deciding the modification hours.
    #[arg(long, default_value = "mid-day6")]
    scenario: ScenarioKind,
    #[arg(long)]
    month: Option<u32>,
    /// Current time for the staleness check; the system clock by default.
    #[arg(long)]
    now: Option<NaiveDateTime>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Synth(a) => commands::synth(&a),
        Command::Ingest(a) => commands::ingest(&a),
        Command::Tune(a) => commands::tune(&a),
        Command::Predict(a) => commands::predict(&a),
        Command::Plan(a) => commands::plan(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Compare(a) => commands::compare(&a),
        Command::Suggest(a) => suggest::suggest(&a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { Exit::Usage as u8 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit as u8)
        }
    }
}
