//! Exit codes and the mapping from library errors onto them.

use std::fmt;

use tesopt::forecast::ForecastError;
use tesopt::plant::PlantError;
use tesopt::scenario::ScenarioError;
use tesopt::tariff::TariffError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Usage = 2,
    Io = 3,
    Config = 4,
    Data = 5,
    MissingBaseline = 6,
    Stale = 7,
}

/// What a command was doing when the error happened; decides the exit code
/// for errors that could be either a config or a data problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Data,
    Run,
}

#[derive(Debug)]
pub struct CliError {
    pub exit: Exit,
    /// Module operation that failed, e.g. `scenario::compare`.
    pub op: &'static str,
    pub message: String,
}

impl CliError {
    pub fn new(exit: Exit, op: &'static str, message: impl Into<String>) -> Self {
        Self {
            exit,
            op,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.op, self.message)
    }
}

fn has_io_source(err: &(dyn std::error::Error + 'static)) -> bool {
    let mut cur = Some(err);
    while let Some(e) = cur {
        if e.is::<std::io::Error>() {
            return true;
        }
        cur = e.source();
    }
    false
}

fn classify(err: &tesopt::Error, stage: Stage) -> Exit {
    use tesopt::Error as E;
    if has_io_source(err) || matches!(err, E::Tariff(TariffError::Read { .. })) {
        return Exit::Io;
    }
    match err {
        E::Scenario(ScenarioError::MissingBaseline) => Exit::MissingBaseline,
        E::Forecast(ForecastError::Config(_) | ForecastError::Unsupported(_))
        | E::Plant(PlantError::Config(_))
        | E::Tariff(TariffError::Config(_))
        | E::Scenario(ScenarioError::Forecast(ForecastError::Config(_) | ForecastError::Unsupported(_))) => {
            Exit::Config
        }
        _ => match stage {
            Stage::Config => Exit::Config,
            Stage::Data | Stage::Run => Exit::Data,
        },
    }
}

/// Attaches the failing operation and picks the exit code.
pub trait OrExit<T> {
    fn or_exit(self, stage: Stage, op: &'static str) -> Result<T, CliError>;
}

impl<T, E: Into<tesopt::Error>> OrExit<T> for Result<T, E> {
    fn or_exit(self, stage: Stage, op: &'static str) -> Result<T, CliError> {
        self.map_err(|e| {
            let e: tesopt::Error = e.into();
            CliError::new(classify(&e, stage), op, e.to_string())
        })
    }
}

pub fn io_error(op: &'static str, path: &std::path::Path, e: std::io::Error) -> CliError {
    CliError::new(Exit::Io, op, format!("{}: {e}", path.display()))
}
