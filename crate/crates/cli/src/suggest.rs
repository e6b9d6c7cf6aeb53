//! Live suggestion for the rest of today from a plant state file.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{Datelike, Duration, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use tesopt::dispatch::{adjust_midday_with, fixed_schedule, plan_day_with};
use tesopt::forecast::{day_ahead_predict, midday_modify, FeatureSource, PipelineConfig};
use tesopt::ingest::LoadRecord;
use tesopt::scenario::{ScenarioKind, SeasonData};
use tesopt::{ControlSeries, IceState};

use crate::commands::{config_paths, load_pipeline, load_season, prepare_out, write_json};
use crate::error::{io_error, CliError, Exit, OrExit, Stage};
use crate::manifest::RunManifest;
use crate::SuggestArgs;

/// States older than this are refused.
pub const MAX_STATE_AGE_HOURS: i64 = 2;

/// Plant state at the start of `hour`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantState {
    pub timestamp: NaiveDateTime,
    pub hour: u32,
    pub ice_kwh: f64,
    /// Measured loads of hours `0..hour` today.
    pub observed_loads_kw: Vec<f64>,
    #[serde(default)]
    pub prior_plan: Option<ControlSeries>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Suggestion {
    pub date: NaiveDate,
    pub hour: u32,
    pub variant: ScenarioKind,
    /// True when the forecast was re-issued at this hour.
    pub modified: bool,
    pub ice_kwh: f64,
    /// Forecast for hours `hour..24` when one was made.
    pub forecast_kw: Option<Vec<f64>>,
    /// Decisions for the remaining hours.
    pub plan: ControlSeries,
    pub notice: Option<String>,
}

fn read_state(path: &Path) -> Result<PlantState, CliError> {
    const OP: &str = "cli::suggest";
    let text = std::fs::read_to_string(path).map_err(|e| io_error(OP, path, e))?;
    let s: PlantState =
        serde_json::from_str(&text).map_err(|e| CliError::new(Exit::Data, OP, format!("{}: {e}", path.display())))?;
    let bad = |m: String| Err(CliError::new(Exit::Data, OP, m));
    if s.hour > 23 {
        return bad(format!("hour {} out of range", s.hour));
    }
    if s.observed_loads_kw.len() != s.hour as usize {
        return bad(format!(
            "{} observed loads given for hour {}; expected one per hour 0..{}",
            s.observed_loads_kw.len(),
            s.hour,
            s.hour
        ));
    }
    if let Some(v) = s.observed_loads_kw.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return bad(format!("observed load {v} is not a non-negative number"));
    }
    Ok(s)
}

fn remaining(plan: &ControlSeries, hour: u32) -> ControlSeries {
    ControlSeries::new(plan.iter().filter(|(h, _)| *h >= hour).collect::<BTreeMap<_, _>>())
}

pub fn suggest(a: &SuggestArgs) -> Result<(), CliError> {
    let cfg = load_season(&a.config.config)?;
    let state = read_state(&a.state)?;
    let now = a.now.unwrap_or_else(|| chrono::Local::now().naive_local());
    let age = now - state.timestamp;
    if age > Duration::hours(MAX_STATE_AGE_HOURS) {
        return Err(CliError::new(
            Exit::Stale,
            "cli::suggest",
            format!(
                "state from {} is {} min old; refresh it (limit {MAX_STATE_AGE_HOURS} h)",
                state.timestamp,
                age.num_minutes()
            ),
        ));
    }
    let date = state.timestamp.date();
    let hour = state.hour;
    let midnight = date.and_hms_opt(0, 0, 0).unwrap();
    let month = a.month.unwrap_or(date.month());
    let plant = cfg.plant().or_exit(Stage::Config, "plant::PlantConfig::from_path")?;
    let tariff = cfg
        .tariff()
        .or_exit(Stage::Config, "tariff::TariffSchedule::from_path")?;
    let seq = tariff
        .hour_sequence(month)
        .or_exit(Stage::Config, "tariff::derive_hour_sequence")?;
    let ice = IceState::new(state.ice_kwh, plant.tank.capacity_kwh).or_exit(Stage::Data, "dispatch::IceState")?;
    let rule = cfg.options.rule;

    let mut out = Suggestion {
        date,
        hour,
        variant: a.scenario,
        modified: false,
        ice_kwh: ice.stored_kwh,
        forecast_kw: None,
        plan: ControlSeries::default(),
        notice: None,
    };
    let Some(variant) = a.scenario.variant() else {
        out.plan = remaining(
            &fixed_schedule(month).or_exit(Stage::Config, "dispatch::fixed_schedule")?,
            hour,
        );
        out.notice = Some("fixed calendar; no forecast involved".into());
        return finish(a, &cfg, None, &out);
    };
    let pipeline = PipelineConfig {
        midday: variant,
        ..load_pipeline(&cfg, a.seed)?
    };

    // Only the files matter here, not an evaluation range.
    let data =
        SeasonData::from_dir(&a.data, NaiveDate::MIN, None).or_exit(Stage::Data, "scenario::SeasonData::from_dir")?;
    let mut loads = data.loads.before(midnight);
    let building = loads
        .records()
        .last()
        .map_or_else(|| "total".to_string(), |r| r.building.clone());
    loads
        .extend(state.observed_loads_kw.iter().enumerate().map(|(h, v)| LoadRecord {
            timestamp: midnight + Duration::hours(h as i64),
            building: building.clone(),
            cooling_load: *v,
        }))
        .or_exit(Stage::Data, "ingest::LoadSeries::extend")?;
    let history = FeatureSource {
        loads: &loads,
        weather: &data.weather,
        holidays: &data.holidays,
    };
    let mut day = [0.0; 24];
    day[..hour as usize].copy_from_slice(&state.observed_loads_kw);

    if variant.is_modification_hour(hour) {
        let preds = midday_modify(&pipeline, &history, &data.forecast_weather, date, hour)
            .or_exit(Stage::Run, "forecast::midday_modify")?;
        day[hour as usize..].copy_from_slice(&preds);
        let plan = match &state.prior_plan {
            Some(prior) if prior.get(hour).is_some() => adjust_midday_with(rule, prior, hour, &ice, &day, &seq),
            _ => plan_day_with(rule, &ice, &day, &seq.from_hour(hour)),
        }
        .or_exit(Stage::Run, "dispatch::adjust_midday")?;
        out.modified = true;
        out.forecast_kw = Some(preds);
        out.plan = remaining(&plan, hour);
    } else if let Some(prior) = &state.prior_plan {
        out.plan = remaining(prior, hour);
        out.notice = Some(format!(
            "hour {hour} is not a modification hour of {variant}; prior plan unchanged"
        ));
    } else {
        let preds = day_ahead_predict(&pipeline, &history, &data.forecast_weather, date)
            .or_exit(Stage::Run, "forecast::day_ahead_predict")?;
        day[hour as usize..].copy_from_slice(&preds[hour as usize..]);
        out.plan = plan_day_with(rule, &ice, &day, &seq.from_hour(hour)).or_exit(Stage::Run, "dispatch::plan_day")?;
        out.forecast_kw = Some(preds[hour as usize..].to_vec());
        out.notice = Some("no prior plan; planned from the day-ahead forecast".into());
    }
    finish(a, &cfg, Some(pipeline.seed), &out)
}

fn finish(
    a: &SuggestArgs,
    cfg: &tesopt::scenario::SeasonConfig,
    seed: Option<u64>,
    out: &Suggestion,
) -> Result<(), CliError> {
    println!("{}", serde_json::to_string_pretty(out).expect("suggestion serializes"));
    let Some(dir) = &a.out else { return Ok(()) };
    prepare_out(dir, &[&a.data])?;
    let path = dir.join(format!("suggestion_{}_{:02}.json", out.date, out.hour));
    write_json(&path, out)?;
    let mut m = RunManifest::new("suggest");
    m.config_paths = config_paths(cfg, &a.config.config);
    m.seed = seed;
    m.inputs = vec![a.data.clone(), a.state.clone()];
    m.output(dir, &path);
    m.write(dir)?;
    Ok(())
}
