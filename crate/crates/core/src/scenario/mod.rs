//! Whole-season control experiments: the fixed baseline against forecast-driven
//! dispatch, with or without mid-day re-planning.

mod oracle;
mod report;
mod season;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use chrono::{Datelike, Duration, NaiveDate};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dispatch::{
    adjust_midday_with, fixed_schedule, plan_day_with, plan_night_charge, AllocationRule, ChargePlan, ControlSeries,
    DispatchError, IceState,
};
use crate::forecast::{
    compute_metrics, DayForecast, FeatureSource, ForecastError, Forecaster, Metrics, MiddayVariant, PipelineConfig,
};
use crate::ingest::{
    generate_synthetic_season, HolidaySet, IngestError, LoadSeries, SyntheticSeasonConfig, WeatherSeries,
};
use crate::plant::{DayResult, DaySimulator, PlantConfig, PlantError, SimOptions};
use crate::tariff::{TariffError, TariffSchedule};

pub use oracle::{brute_force, brute_force_day, greedy_cost, ConstantCop, OracleResult, MAX_ORACLE_HOURS};
pub use report::{emit_report, ReportFormat, COMPARISON_CSV_HEADER, DAY_CSV_HEADER};
pub use season::{SeasonConfig, SeasonFiles, DATA_FILES};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("missing baseline: comparison needs a Fixed scenario result")]
    MissingBaseline,
    #[error("scenario {0} appears more than once")]
    Duplicate(ScenarioKind),
    #[error("invalid scenario input: {0}")]
    Input(String),
    #[error("oracle enumeration over {hours} hours exceeds the limit of {limit}")]
    TooManyHours { hours: usize, limit: usize },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Forecast(#[from] ForecastError),
    #[error(transparent)]
    Plant(#[from] PlantError),
    #[error(transparent)]
    Dispatch(#[from] DispatchError),
    #[error(transparent)]
    Tariff(#[from] TariffError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ScenarioKind {
    #[serde(rename = "fixed")]
    Fixed,
    #[serde(rename = "day-ahead")]
    DayAhead,
    #[serde(rename = "mid-day6")]
    MidDay6,
    #[serde(rename = "mid-day24")]
    MidDay24,
}

impl ScenarioKind {
    /// Report order.
    pub const ALL: [ScenarioKind; 4] = [
        ScenarioKind::Fixed,
        ScenarioKind::DayAhead,
        ScenarioKind::MidDay6,
        ScenarioKind::MidDay24,
    ];

    pub fn id(self) -> &'static str {
        match self {
            ScenarioKind::Fixed => "fixed",
            ScenarioKind::DayAhead => "day-ahead",
            ScenarioKind::MidDay6 => "mid-day6",
            ScenarioKind::MidDay24 => "mid-day24",
        }
    }

    /// Forecast variant driving the plan; `None` for the fixed calendar.
    pub fn variant(self) -> Option<MiddayVariant> {
        match self {
            ScenarioKind::Fixed => None,
            ScenarioKind::DayAhead => Some(MiddayVariant::DayAhead),
            ScenarioKind::MidDay6 => Some(MiddayVariant::Midday6),
            ScenarioKind::MidDay24 => Some(MiddayVariant::Midday24),
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for ScenarioKind {
    type Err = ScenarioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .trim()
            .to_ascii_lowercase()
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect();
        match key.as_str() {
            "fixed" => Ok(ScenarioKind::Fixed),
            "dayahead" => Ok(ScenarioKind::DayAhead),
            "midday6" => Ok(ScenarioKind::MidDay6),
            "midday24" => Ok(ScenarioKind::MidDay24),
            _ => Err(ScenarioError::Input(format!("unknown scenario {s:?}"))),
        }
    }
}

/// Observed loads and weather for a season, plus the evaluated date range.
#[derive(Debug, Clone)]
pub struct SeasonData {
    pub loads: LoadSeries,
    /// Weather used for training.
    pub weather: WeatherSeries,
    /// Weather as forecast at prediction time.
    pub forecast_weather: WeatherSeries,
    pub holidays: HolidaySet,
    pub start: NaiveDate,
    /// Inclusive.
    pub end: NaiveDate,
}

impl SeasonData {
    /// Synthetic season evaluated from `eval_start` to the config's end. The
    /// forecast weather equals the generated weather.
    pub fn synthetic(config: &SyntheticSeasonConfig, eval_start: NaiveDate) -> Result<SeasonData, ScenarioError> {
        config.validate().map_err(ScenarioError::Input)?;
        if !(config.start..=config.end).contains(&eval_start) {
            return Err(ScenarioError::Input(format!(
                "evaluation start {eval_start} outside {}..={}",
                config.start, config.end
            )));
        }
        let (loads, weather) = generate_synthetic_season(config);
        Ok(SeasonData {
            loads,
            forecast_weather: weather.clone(),
            weather,
            holidays: HolidaySet::new(config.holidays.iter().copied()),
            start: eval_start,
            end: config.end,
        })
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        self.start.iter_days().take_while(|d| *d <= self.end).collect()
    }

    pub fn history(&self) -> FeatureSource<'_> {
        FeatureSource {
            loads: &self.loads,
            weather: &self.weather,
            holidays: &self.holidays,
        }
    }

    pub fn actual_day(&self, date: NaiveDate) -> Option<[f64; 24]> {
        self.loads.day(date)
    }
}

/// Source of the forecasts a scenario plans with.
pub trait LoadPredictor {
    fn forecast_day(
        &mut self,
        data: &SeasonData,
        date: NaiveDate,
        variant: MiddayVariant,
    ) -> Result<DayForecast, ForecastError>;
}

/// The sliding-window forecasting pipeline, one forecaster per variant.
#[derive(Debug, Clone)]
pub struct PipelinePredictor {
    config: PipelineConfig,
    forecasters: Vec<(MiddayVariant, Forecaster)>,
}

impl PipelinePredictor {
    pub fn new(config: PipelineConfig) -> Result<Self, ForecastError> {
        config.validate()?;
        Ok(Self {
            config,
            forecasters: Vec::new(),
        })
    }
}

impl LoadPredictor for PipelinePredictor {
    fn forecast_day(
        &mut self,
        data: &SeasonData,
        date: NaiveDate,
        variant: MiddayVariant,
    ) -> Result<DayForecast, ForecastError> {
        let pos = match self.forecasters.iter().position(|(v, _)| *v == variant) {
            Some(p) => p,
            None => {
                let cfg = PipelineConfig {
                    midday: variant,
                    ..self.config.clone()
                };
                self.forecasters.push((variant, Forecaster::new(cfg)?));
                self.forecasters.len() - 1
            }
        };
        self.forecasters[pos]
            .1
            .forecast_day(&data.history(), &data.forecast_weather, date)
    }
}

/// Forecasts equal to the observed loads.
#[derive(Debug, Clone, Copy, Default)]
pub struct PerfectPredictor;

impl LoadPredictor for PerfectPredictor {
    fn forecast_day(
        &mut self,
        data: &SeasonData,
        date: NaiveDate,
        variant: MiddayVariant,
    ) -> Result<DayForecast, ForecastError> {
        let actual = data.actual_day(date).ok_or_else(|| ForecastError::MissingData {
            what: "observed loads for the day".into(),
            at: date.and_hms_opt(0, 0, 0).expect("midnight"),
        })?;
        Ok(DayForecast {
            date,
            variant,
            day_ahead: actual,
            updates: variant
                .modification_hours()
                .into_iter()
                .map(|h| (h, actual[h as usize..].to_vec()))
                .collect(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioOptions {
    pub rule: AllocationRule,
    /// Stored ice at midnight of the first evaluated day.
    pub initial_ice_kwh: f64,
    /// Forecast-driven scenarios use left-over ice late in the day; the fixed
    /// calendar runs exactly as scheduled.
    pub leftover_hours: Vec<u32>,
}

impl Default for ScenarioOptions {
    fn default() -> Self {
        Self {
            rule: AllocationRule::default(),
            initial_ice_kwh: 0.0,
            leftover_hours: SimOptions::default().leftover_hours,
        }
    }
}

/// One simulated day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayRecord {
    pub date: NaiveDate,
    pub actual: [f64; 24],
    /// Latest forecast in effect at each hour.
    pub predicted: Option<[f64; 24]>,
    /// Plan after the last adjustment of the day.
    pub plan: ControlSeries,
    /// Stored ice when the plan for the first daytime hour was made.
    pub ice_at_plan_kwh: f64,
    pub result: DayResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayFailure {
    pub date: NaiveDate,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub kind: ScenarioKind,
    pub days: Vec<DayRecord>,
    /// Days left out of the totals.
    pub failures: Vec<DayFailure>,
    pub total_kwh: f64,
    pub cost_rmb: f64,
    /// Forecast error over all hours of the simulated days.
    pub metrics: Option<Metrics>,
}

impl ScenarioResult {
    pub fn mean_daily_cost(&self) -> f64 {
        if self.days.is_empty() {
            0.0
        } else {
            self.cost_rmb / self.days.len() as f64
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn run_day(
    kind: ScenarioKind,
    data: &SeasonData,
    predictor: &mut dyn LoadPredictor,
    plant: &PlantConfig,
    tariff: &TariffSchedule,
    options: &ScenarioOptions,
    date: NaiveDate,
    ice: IceState,
    charge: &ChargePlan,
) -> Result<DayRecord, ScenarioError> {
    let month = date.month();
    let actual = data
        .actual_day(date)
        .ok_or_else(|| ScenarioError::Input(format!("observed loads for {date} are incomplete")))?;
    let sim_options = SimOptions {
        leftover_hours: if kind == ScenarioKind::Fixed {
            Vec::new()
        } else {
            options.leftover_hours.clone()
        },
        ..SimOptions::default()
    };
    let mut sim = DaySimulator::new(plant, tariff, month, ice, charge.clone(), sim_options)?;
    let forecast = match kind.variant() {
        Some(v) => Some(predictor.forecast_day(data, date, v)?),
        None => None,
    };
    let seq = tariff.hour_sequence(month)?;
    let mut plan: Option<ControlSeries> = match kind {
        ScenarioKind::Fixed => Some(fixed_schedule(month)?),
        _ => None,
    };
    let mut ice_at_plan = None;
    for h in 0..24u32 {
        if !sim.is_charging_hour(h) {
            if let Some(fc) = &forecast {
                let loads = fc.as_of(h);
                plan = Some(match plan.take() {
                    None => plan_day_with(options.rule, &sim.ice(), &loads, &seq)?,
                    Some(p) if fc.variant.is_modification_hour(h) => {
                        adjust_midday_with(options.rule, &p, h, &sim.ice(), &loads, &seq)?
                    }
                    Some(p) => p,
                });
            }
            ice_at_plan.get_or_insert(sim.ice().stored_kwh);
        }
        let decision = plan.as_ref().and_then(|p| p.get(h));
        sim.step(actual[h as usize], decision)?;
    }
    Ok(DayRecord {
        date,
        actual,
        predicted: forecast.as_ref().map(DayForecast::effective),
        plan: plan.unwrap_or_default(),
        ice_at_plan_kwh: ice_at_plan.unwrap_or(0.0),
        result: sim.finish()?,
    })
}

/// Runs one scenario day by day over `data`'s evaluated range. Ice and the
/// night charge plan carry from one day to the next. A day that fails is
/// recorded and skipped: the ice state is carried over unchanged and the
/// next morning charges as usual.
pub fn run_scenario(
    kind: ScenarioKind,
    data: &SeasonData,
    predictor: &mut dyn LoadPredictor,
    plant: &PlantConfig,
    tariff: &TariffSchedule,
    options: &ScenarioOptions,
) -> Result<ScenarioResult, ScenarioError> {
    plant.validate()?;
    if data.end < data.start {
        return Err(ScenarioError::Input(format!(
            "empty date range {}..={}",
            data.start, data.end
        )));
    }
    let capacity = plant.tank.capacity_kwh;
    let mut ice = IceState::new(options.initial_ice_kwh, capacity)?;
    let morning = |month: u32| -> Result<Vec<u32>, TariffError> {
        let last_day = tariff.daytime_hours(month)?.into_iter().max().unwrap_or(0);
        Ok(tariff
            .off_peak_hours(month)?
            .into_iter()
            .filter(|h| *h < last_day)
            .collect())
    };
    let mut charge = plan_night_charge(&ice, plant.max_charge_rate_kw(), &morning(data.start.month())?);
    let mut days = Vec::new();
    let mut failures = Vec::new();
    for date in data.dates() {
        match run_day(kind, data, predictor, plant, tariff, options, date, ice, &charge) {
            Ok(record) => {
                ice = record.result.ice_end;
                charge = record.result.next_charge.clone();
                days.push(record);
            }
            Err(e) => {
                log::warn!("{kind} {date}: {e}");
                failures.push(DayFailure {
                    date,
                    message: e.to_string(),
                });
                let next_month = (date + Duration::days(1)).month();
                charge = plan_night_charge(&ice, plant.max_charge_rate_kw(), &morning(next_month)?);
            }
        }
    }
    let metrics = if kind == ScenarioKind::Fixed || days.is_empty() {
        None
    } else {
        let actual: Vec<f64> = days.iter().flat_map(|d| d.actual).collect();
        let predicted: Vec<f64> = days
            .iter()
            .flat_map(|d| d.predicted.expect("forecast-driven day"))
            .collect();
        Some(compute_metrics(&actual, &predicted)?)
    };
    Ok(ScenarioResult {
        kind,
        total_kwh: days.iter().map(|d| d.result.total_kwh).sum(),
        cost_rmb: days.iter().map(|d| d.result.cost_rmb).sum(),
        days,
        failures,
        metrics,
    })
}

/// Runs `kinds` in parallel, each with its own copy of the forecasting
/// pipeline. Results come back in the order given.
pub fn run_season(
    kinds: &[ScenarioKind],
    data: &SeasonData,
    pipeline: &PipelineConfig,
    plant: &PlantConfig,
    tariff: &TariffSchedule,
    options: &ScenarioOptions,
) -> Result<Vec<ScenarioResult>, ScenarioError> {
    pipeline.validate()?;
    let needed = data.start - Duration::days(pipeline.history_days as i64);
    let first = data.loads.first_timestamp().map(|t| t.date());
    if kinds.iter().any(|k| *k != ScenarioKind::Fixed) && first.is_none_or(|f| f > needed) {
        return Err(ScenarioError::Input(format!(
            "forecast-driven scenarios starting {} need loads from {needed}",
            data.start
        )));
    }
    kinds
        .par_iter()
        .map(|&kind| {
            let mut predictor = PipelinePredictor::new(pipeline.clone())?;
            run_scenario(kind, data, &mut predictor, plant, tariff, options)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub scenario: ScenarioKind,
    pub days: usize,
    pub failed_days: usize,
    pub total_kwh: f64,
    pub cost_rmb: f64,
    /// Saving against Fixed; `None` on the Fixed row.
    pub reduction_rmb: Option<f64>,
    pub reduction_pct: Option<f64>,
    pub metrics: Option<Metrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonTable {
    pub fn row(&self, kind: ScenarioKind) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.scenario == kind)
    }
}

/// Costs against the Fixed baseline, rows in [`ScenarioKind::ALL`] order.
pub fn compare(results: &[ScenarioResult]) -> Result<ComparisonTable, ScenarioError> {
    for (i, r) in results.iter().enumerate() {
        if results[..i].iter().any(|o| o.kind == r.kind) {
            return Err(ScenarioError::Duplicate(r.kind));
        }
    }
    let base = results
        .iter()
        .find(|r| r.kind == ScenarioKind::Fixed)
        .ok_or(ScenarioError::MissingBaseline)?
        .cost_rmb;
    let mut sorted: Vec<&ScenarioResult> = results.iter().collect();
    sorted.sort_by_key(|r| r.kind);
    let rows = sorted
        .into_iter()
        .map(|r| {
            let (reduction_rmb, reduction_pct) = if r.kind == ScenarioKind::Fixed {
                (None, None)
            } else {
                let saved = base - r.cost_rmb;
                (Some(saved), (base != 0.0).then(|| 100.0 * saved / base))
            };
            ComparisonRow {
                scenario: r.kind,
                days: r.days.len(),
                failed_days: r.failures.len(),
                total_kwh: r.total_kwh,
                cost_rmb: r.cost_rmb,
                reduction_rmb,
                reduction_pct,
                metrics: r.metrics,
            }
        })
        .collect();
    Ok(ComparisonTable { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::ClimateConfig;

    fn season(days: i64, history: i64) -> SeasonData {
        let start = NaiveDate::from_ymd_opt(2021, 7, 1).unwrap();
        let cfg = SyntheticSeasonConfig {
            start: start - Duration::days(history),
            end: start + Duration::days(days - 1),
            climate: ClimateConfig::default(),
            ..SyntheticSeasonConfig::default()
        };
        SeasonData::synthetic(&cfg, start).unwrap()
    }

    fn fake(kind: ScenarioKind, cost: f64) -> ScenarioResult {
        ScenarioResult {
            kind,
            days: Vec::new(),
            failures: Vec::new(),
            total_kwh: 0.0,
            cost_rmb: cost,
            metrics: None,
        }
    }

    #[test]
    fn kinds() {
        assert_eq!("MidDay6".parse::<ScenarioKind>().unwrap(), ScenarioKind::MidDay6);
        assert_eq!("day-ahead".parse::<ScenarioKind>().unwrap(), ScenarioKind::DayAhead);
        assert!("hourly".parse::<ScenarioKind>().is_err());
        assert_eq!(ScenarioKind::Fixed.variant(), None);
        assert_eq!(ScenarioKind::MidDay24.variant(), Some(MiddayVariant::Midday24));
    }

    #[test]
    fn fixed_single_day() {
        let data = season(1, 0);
        let r = run_scenario(
            ScenarioKind::Fixed,
            &data,
            &mut PerfectPredictor,
            &PlantConfig::default(),
            &TariffSchedule::beijing_2021(),
            &ScenarioOptions::default(),
        )
        .unwrap();
        assert_eq!(r.days.len(), 1);
        assert_eq!(r.days[0].plan, fixed_schedule(7).unwrap());
        assert!(r.metrics.is_none());
        assert_eq!(r.cost_rmb, r.days[0].result.cost_rmb);
    }

    #[test]
    fn perfect_day_ahead_plans_are_feasible() {
        let data = season(10, 0);
        let r = run_scenario(
            ScenarioKind::DayAhead,
            &data,
            &mut PerfectPredictor,
            &PlantConfig::default(),
            &TariffSchedule::beijing_2021(),
            &ScenarioOptions::default(),
        )
        .unwrap();
        assert_eq!(r.days.len(), 10);
        assert!(r.failures.is_empty());
        for d in &r.days {
            let used: f64 = d.plan.ice_hours().iter().map(|h| d.actual[*h as usize]).sum();
            assert!(
                used <= d.ice_at_plan_kwh + 1e-9,
                "{}: {used} > {}",
                d.date,
                d.ice_at_plan_kwh
            );
            assert_eq!(d.result.unmet_kwh, 0.0);
        }
        let m = r.metrics.unwrap();
        assert_eq!(m.mae, 0.0);
        let total: f64 = r.days.iter().map(|d| d.result.cost_rmb).sum();
        assert_eq!(total, r.cost_rmb);
        // ice carries over
        for w in r.days.windows(2) {
            assert_eq!(w[0].result.ice_end, w[1].result.ice_start);
        }
    }

    #[test]
    fn perfect_forecasts_beat_the_fixed_calendar() {
        let data = season(14, 0);
        let plant = PlantConfig::default();
        let tariff = TariffSchedule::beijing_2021();
        let opts = ScenarioOptions::default();
        let cost = |kind| {
            run_scenario(kind, &data, &mut PerfectPredictor, &plant, &tariff, &opts)
                .unwrap()
                .cost_rmb
        };
        let fixed = cost(ScenarioKind::Fixed);
        let day_ahead = cost(ScenarioKind::DayAhead);
        let mid6 = cost(ScenarioKind::MidDay6);
        assert!(day_ahead <= fixed, "{day_ahead} > {fixed}");
        // with exact forecasts re-planning changes nothing
        assert!((mid6 - day_ahead).abs() <= 1e-9 * day_ahead, "{mid6} vs {day_ahead}");
    }

    #[test]
    fn failing_days_are_recorded() {
        let mut data = season(3, 0);
        let keep = data
            .loads
            .before(data.start.and_hms_opt(0, 0, 0).unwrap() + Duration::hours(30));
        let rest: Vec<_> = data
            .loads
            .records()
            .iter()
            .filter(|r| r.timestamp >= data.start.and_hms_opt(0, 0, 0).unwrap() + Duration::hours(48))
            .cloned()
            .collect();
        let mut loads = keep;
        loads.extend(rest).unwrap();
        data.loads = loads;
        let r = run_scenario(
            ScenarioKind::Fixed,
            &data,
            &mut PerfectPredictor,
            &PlantConfig::default(),
            &TariffSchedule::beijing_2021(),
            &ScenarioOptions::default(),
        )
        .unwrap();
        assert_eq!(r.days.len(), 2);
        assert_eq!(r.failures.len(), 1);
        assert_eq!(r.failures[0].date, data.start + Duration::days(1));
    }

    #[test]
    fn comparison_rows() {
        let t = compare(&[fake(ScenarioKind::DayAhead, 90.0), fake(ScenarioKind::Fixed, 100.0)]).unwrap();
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.rows[0].scenario, ScenarioKind::Fixed);
        assert_eq!(t.rows[0].reduction_rmb, None);
        assert_eq!(t.rows[1].reduction_rmb, Some(10.0));
        assert!((t.rows[1].reduction_pct.unwrap() - 10.0).abs() < 1e-12);
        let same = compare(&[fake(ScenarioKind::Fixed, 5.0), fake(ScenarioKind::MidDay6, 5.0)]).unwrap();
        assert_eq!(same.rows[1].reduction_rmb, Some(0.0));
        assert!(matches!(
            compare(&[fake(ScenarioKind::DayAhead, 1.0)]),
            Err(ScenarioError::MissingBaseline)
        ));
        assert!(matches!(
            compare(&[fake(ScenarioKind::Fixed, 1.0), fake(ScenarioKind::Fixed, 2.0)]),
            Err(ScenarioError::Duplicate(_))
        ));
    }

    #[test]
    fn season_needs_history_for_forecasts() {
        let data = season(2, 3);
        let err = run_season(
            &[ScenarioKind::DayAhead],
            &data,
            &PipelineConfig::default(),
            &PlantConfig::default(),
            &TariffSchedule::beijing_2021(),
            &ScenarioOptions::default(),
        );
        assert!(matches!(err, Err(ScenarioError::Input(_))));
    }
}
