//! Cooling-load forecasting and ice thermal-storage dispatch.
//!
//! The crate is split along the pipeline:
//!
//! * [`ingest`] reads and synthesizes hourly load, weather and calendar data.
//! * [`forecast`] trains sliding-window regressors (random forest by default),
//!   runs cross-validation, grid and feature-combination searches, and issues
//!   day-ahead and mid-day predictions.
//! * [`tariff`] models the month-dependent time-of-use tariff and derives the
//!   hour priority sequence used to allocate stored ice.
//! * [`dispatch`] turns predictions into hourly ice/chiller decisions.
//! * [`plant`] simulates the chiller plant and prices its electricity.
//! * [`scenario`] runs whole-season experiments and writes reports.
//!
//! The guide in `book/` walks through each stage with runnable snippets.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dispatch;
pub mod forecast;
pub mod ingest;
pub mod plant;
pub mod scenario;
pub mod tariff;

use thiserror::Error;

pub use dispatch::{AllocationRule, ChargePlan, ControlSeries, Decision, IceState};
pub use forecast::{FeatureMask, ForecastModel, Metrics, MiddayVariant, PipelineConfig};
pub use ingest::{HolidaySet, LoadSeries, WeatherSeries};
pub use plant::PlantConfig;
pub use scenario::{ComparisonTable, ScenarioKind, ScenarioResult};
pub use tariff::{HourSequence, TariffSchedule, Tier};

/// Crate-wide error, wrapping the per-module error types.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Ingest(#[from] ingest::IngestError),
    #[error(transparent)]
    Provider(#[from] ingest::ProviderError),
    #[error(transparent)]
    Forecast(#[from] forecast::ForecastError),
    #[error(transparent)]
    Tariff(#[from] tariff::TariffError),
    #[error(transparent)]
    Dispatch(#[from] dispatch::DispatchError),
    #[error(transparent)]
    Plant(#[from] plant::PlantError),
    #[error(transparent)]
    Scenario(#[from] scenario::ScenarioError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
