//! Sliding-window day-ahead forecasting and mid-day modification.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use chrono::{Duration, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::features::{assemble_features, at_hour, AnchorWindow, FeatureMask, FeatureSource, FeatureVector, SampleSet};
use super::model::{train_regressor, ForecastModel, ModelParams};
use super::search::{feature_search, grid_search, CvOptions, GridResult, HyperParamGrid, MaskScore};
use super::ForecastError;
use crate::ingest::{format_timestamp, parse_timestamp, WeatherSeries};

pub const HISTORY_DAY_CHOICES: [u32; 4] = [7, 14, 30, 60];
pub const WINDOW_DAY_CHOICES: [u32; 3] = [1, 7, 30];
pub const MIDDAY6_HOURS: [u32; 5] = [7, 8, 9, 15, 17];

/// When, besides midnight, the remaining hours are re-forecast.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum MiddayVariant {
    #[default]
    #[serde(rename = "day-ahead")]
    DayAhead,
    #[serde(rename = "mid-day6")]
    Midday6,
    #[serde(rename = "mid-day24")]
    Midday24,
}

impl MiddayVariant {
    pub const ALL: [MiddayVariant; 3] = [MiddayVariant::DayAhead, MiddayVariant::Midday6, MiddayVariant::Midday24];

    pub fn id(self) -> &'static str {
        match self {
            MiddayVariant::DayAhead => "day-ahead",
            MiddayVariant::Midday6 => "mid-day6",
            MiddayVariant::Midday24 => "mid-day24",
        }
    }

    /// Modification hours in increasing order. Hour 0 is never one: nothing
    /// of the day has been observed yet.
    pub fn modification_hours(self) -> Vec<u32> {
        match self {
            MiddayVariant::DayAhead => Vec::new(),
            MiddayVariant::Midday6 => MIDDAY6_HOURS.to_vec(),
            MiddayVariant::Midday24 => (1..24).collect(),
        }
    }

    pub fn is_modification_hour(self, hour: u32) -> bool {
        self.modification_hours().contains(&hour)
    }

    /// Observed hours averaged into A at `hour`: from the previous
    /// modification hour (midnight for the first) up to `hour`, exclusive.
    pub fn anchor_window(self, hour: u32) -> Result<AnchorWindow, ForecastError> {
        let hours = self.modification_hours();
        let pos = hours
            .iter()
            .position(|&h| h == hour)
            .ok_or_else(|| ForecastError::Config(format!("hour {hour} is not a modification hour of {}", self.id())))?;
        let prev = if pos == 0 { 0 } else { hours[pos - 1] };
        AnchorWindow::new(prev, hour)
    }
}

impl fmt::Display for MiddayVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for MiddayVariant {
    type Err = ForecastError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .trim()
            .to_ascii_lowercase()
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect();
        match key.as_str() {
            "dayahead" => Ok(MiddayVariant::DayAhead),
            "midday6" => Ok(MiddayVariant::Midday6),
            "midday24" => Ok(MiddayVariant::Midday24),
            _ => Err(ForecastError::Config(format!("unknown mid-day variant {s:?}"))),
        }
    }
}

/// A fixed mask, or `"search"` to run the 127-mask search on the first
/// training window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskChoice {
    Fixed(FeatureMask),
    Search,
}

impl Default for MaskChoice {
    fn default() -> Self {
        MaskChoice::Fixed(FeatureMask::FULL)
    }
}

impl Serialize for MaskChoice {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            MaskChoice::Fixed(m) => m.serialize(s),
            MaskChoice::Search => s.serialize_str("search"),
        }
    }
}

impl<'de> Deserialize<'de> for MaskChoice {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        if s.trim().eq_ignore_ascii_case("search") {
            Ok(MaskChoice::Search)
        } else {
            s.parse().map(MaskChoice::Fixed).map_err(serde::de::Error::custom)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub model: ModelParams,
    /// When set, the model hyperparameters are tuned on the first training
    /// window instead of taken from `model`.
    pub grid: Option<HyperParamGrid>,
    pub mask: MaskChoice,
    pub history_days: u32,
    pub window_days: u32,
    pub midday: MiddayVariant,
    pub seed: u64,
    pub clamp: bool,
    /// Allowed mean deviation, as a fraction of mean load, between a mid-day
    /// re-forecast and the prior forecast when the observations carry no new
    /// information.
    pub no_info_tolerance: f64,
    pub cv: CvOptions,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            model: ModelParams::default(),
            grid: None,
            mask: MaskChoice::default(),
            history_days: 60,
            window_days: 1,
            midday: MiddayVariant::DayAhead,
            seed: 20210701,
            clamp: true,
            no_info_tolerance: 0.10,
            cv: CvOptions::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), ForecastError> {
        if !HISTORY_DAY_CHOICES.contains(&self.history_days) {
            return Err(ForecastError::Config(format!(
                "history_days {} not one of {HISTORY_DAY_CHOICES:?}",
                self.history_days
            )));
        }
        if !WINDOW_DAY_CHOICES.contains(&self.window_days) {
            return Err(ForecastError::Config(format!(
                "window_days {} not one of {WINDOW_DAY_CHOICES:?}",
                self.window_days
            )));
        }
        if !(self.no_info_tolerance >= 0.0 && self.no_info_tolerance.is_finite()) {
            return Err(ForecastError::Config(
                "no_info_tolerance must be a finite value >= 0".into(),
            ));
        }
        if self.cv.k < 2 {
            return Err(ForecastError::Config(format!("cv.k must be >= 2, got {}", self.cv.k)));
        }
        self.model.validate()?;
        if let Some(g) = &self.grid {
            g.validate()?;
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, ForecastError> {
        let cfg: PipelineConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// Forecasts issued for one day: the midnight forecast plus each mid-day
/// re-forecast of the remaining hours.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DayForecast {
    pub date: NaiveDate,
    pub variant: MiddayVariant,
    pub day_ahead: [f64; 24],
    /// `(hour, predictions for hour..24)` in increasing hour order.
    pub updates: Vec<(u32, Vec<f64>)>,
}

impl DayForecast {
    /// Latest forecast available for each hour by the time it starts.
    pub fn effective(&self) -> [f64; 24] {
        let mut out = self.day_ahead;
        for (h, preds) in &self.updates {
            out[*h as usize..].copy_from_slice(preds);
        }
        out
    }

    /// Forecast known at `hour` (after that hour's update, if any).
    pub fn as_of(&self, hour: u32) -> [f64; 24] {
        let mut out = self.day_ahead;
        for (h, preds) in self.updates.iter().filter(|(h, _)| *h <= hour) {
            out[*h as usize..].copy_from_slice(preds);
        }
        out
    }

    pub fn records(&self) -> Vec<PredictionRecord> {
        let mut rows: Vec<PredictionRecord> = (0..24)
            .map(|h| PredictionRecord {
                timestamp: at_hour(self.date, h),
                predicted_kw: self.day_ahead[h as usize],
                issued_at: at_hour(self.date, 0),
                variant: self.variant,
            })
            .collect();
        for (h, preds) in &self.updates {
            rows.extend(preds.iter().enumerate().map(|(i, p)| PredictionRecord {
                timestamp: at_hour(self.date, *h + i as u32),
                predicted_kw: *p,
                issued_at: at_hour(self.date, *h),
                variant: self.variant,
            }));
        }
        rows
    }
}

/// Runs the configured pipeline day by day, retraining the day-ahead model
/// every `window_days`.
#[derive(Debug, Clone)]
pub struct Forecaster {
    config: PipelineConfig,
    selected: Option<(ModelParams, FeatureMask)>,
    model: Option<ForecastModel>,
    trained_for: Option<NaiveDate>,
    trainings: usize,
    midday_trainings: usize,
}

impl Forecaster {
    pub fn new(config: PipelineConfig) -> Result<Self, ForecastError> {
        config.validate()?;
        Ok(Self {
            config,
            selected: None,
            model: None,
            trained_for: None,
            trainings: 0,
            midday_trainings: 0,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    /// Day-ahead model fits so far.
    pub fn trainings(&self) -> usize {
        self.trainings
    }

    pub fn midday_trainings(&self) -> usize {
        self.midday_trainings
    }

    pub fn model(&self) -> Option<&ForecastModel> {
        self.model.as_ref()
    }

    /// Parameters and mask in use, once the first window has been seen.
    pub fn selection(&self) -> Option<&(ModelParams, FeatureMask)> {
        self.selected.as_ref()
    }

    fn history_start(&self, date: NaiveDate) -> NaiveDate {
        date - Duration::days(self.config.history_days as i64)
    }

    fn check_history(&self, src: &FeatureSource<'_>, date: NaiveDate) -> Result<(), ForecastError> {
        let needed_from = self.history_start(date);
        let available_from = src.loads.first_timestamp().map(|t| t.date());
        if available_from.is_none_or(|a| a > needed_from) {
            return Err(ForecastError::ShortHistory {
                date,
                needed_from,
                available_from,
            });
        }
        Ok(())
    }

    fn training_hours(&self, date: NaiveDate, hours: std::ops::Range<u32>) -> Vec<NaiveDateTime> {
        let start = self.history_start(date);
        (0..self.config.history_days as i64)
            .flat_map(|d| {
                let day = start + Duration::days(d);
                hours.clone().map(move |h| at_hour(day, h))
            })
            .collect()
    }

    fn ensure_selected(&mut self, samples: &SampleSet) -> Result<(ModelParams, FeatureMask), ForecastError> {
        if let Some(s) = &self.selected {
            return Ok(s.clone());
        }
        let (params, mask, _, _) = select(&self.config, samples)?;
        log::info!("forecast model {} with mask {mask}", params.algorithm());
        self.selected = Some((params.clone(), mask));
        Ok((params, mask))
    }

    fn predict(&self, model: &ForecastModel, v: &FeatureVector) -> Result<f64, ForecastError> {
        if self.config.clamp {
            model.predict(v)
        } else {
            model.predict_raw(&v.row(model.mask, model.anchored)?)
        }
    }

    fn needs_retrain(&self, date: NaiveDate) -> bool {
        match self.trained_for {
            None => true,
            Some(t) => date < t || (date - t).num_days() >= self.config.window_days as i64,
        }
    }

    /// Hourly forecast for `date` issued at midnight. `history` supplies
    /// observed loads and historical weather; only data before `date` is used.
    pub fn day_ahead(
        &mut self,
        history: &FeatureSource<'_>,
        forecast_weather: &WeatherSeries,
        date: NaiveDate,
    ) -> Result<[f64; 24], ForecastError> {
        self.check_history(history, date)?;
        let loads = history.loads.before(at_hour(date, 0));
        if self.needs_retrain(date) {
            let past = FeatureSource {
                loads: &loads,
                ..*history
            };
            let samples = SampleSet::build(&past, self.training_hours(date, 0..24), None);
            let (params, mask) = self.ensure_selected(&samples)?;
            self.model = Some(train_regressor(&params, &samples, mask, self.config.seed)?);
            self.trained_for = Some(date);
            self.trainings += 1;
        }
        let model = self.model.as_ref().expect("model trained above");
        let src = FeatureSource {
            loads: &loads,
            weather: forecast_weather,
            holidays: history.holidays,
        };
        let mut out = [0.0; 24];
        for h in 0..24 {
            let v = assemble_features(&src, model.mask, at_hour(date, h), None)?;
            out[h as usize] = self.predict(model, &v)?;
        }
        Ok(out)
    }

    /// Re-forecast of hours `hour..24` of `date` from loads observed before
    /// `hour`. A fresh model with the extra input A is trained on the history
    /// window (hours >= `hour` of each day) plus today's anchor-window hours.
    pub fn midday(
        &mut self,
        history: &FeatureSource<'_>,
        forecast_weather: &WeatherSeries,
        date: NaiveDate,
        hour: u32,
    ) -> Result<Vec<f64>, ForecastError> {
        let window = self.config.midday.anchor_window(hour)?;
        self.check_history(history, date)?;
        let loads = history.loads.before(at_hour(date, hour));
        for h in window.start_hour..window.end_hour {
            let ts = at_hour(date, h);
            if loads.load_at(ts).is_none() {
                return Err(ForecastError::MissingData {
                    what: "observed load before the modification hour".into(),
                    at: ts,
                });
            }
        }
        let past = FeatureSource {
            loads: &loads,
            ..*history
        };
        let (params, mask) = match self.selected.clone() {
            Some(s) => s,
            None => {
                let before = history.loads.before(at_hour(date, 0));
                let src = FeatureSource {
                    loads: &before,
                    ..*history
                };
                self.ensure_selected(&SampleSet::build(&src, self.training_hours(date, 0..24), None))?
            }
        };
        let mut samples = SampleSet::build(&past, self.training_hours(date, hour..24), Some(window));
        let today = SampleSet::build(
            &past,
            (window.start_hour..window.end_hour).map(|h| at_hour(date, h)),
            Some(window),
        );
        for i in 0..today.len() {
            let mut v = FeatureVector {
                anchor: today.anchors.as_ref().map(|a| a[i]),
                ..FeatureVector::default()
            };
            for (j, val) in today.features[i].iter().enumerate() {
                v.values[j] = Some(*val);
            }
            samples.push(today.timestamps[i], &v, today.targets[i]);
        }
        let model = train_regressor(&params, &samples, mask, self.config.seed)?;
        self.midday_trainings += 1;
        let src = FeatureSource {
            loads: &loads,
            weather: forecast_weather,
            holidays: history.holidays,
        };
        (hour..24)
            .map(|h| {
                let v = assemble_features(&src, mask, at_hour(date, h), Some(window))?;
                self.predict(&model, &v)
            })
            .collect()
    }

    /// Midnight forecast plus every modification of the configured variant.
    pub fn forecast_day(
        &mut self,
        history: &FeatureSource<'_>,
        forecast_weather: &WeatherSeries,
        date: NaiveDate,
    ) -> Result<DayForecast, ForecastError> {
        let day_ahead = self.day_ahead(history, forecast_weather, date)?;
        let mut updates = Vec::new();
        for h in self.config.midday.modification_hours() {
            updates.push((h, self.midday(history, forecast_weather, date, h)?));
        }
        Ok(DayForecast {
            date,
            variant: self.config.midday,
            day_ahead,
            updates,
        })
    }
}

type Selection = (ModelParams, FeatureMask, Vec<MaskScore>, Option<GridResult>);

/// Mask first (searched or fixed), then hyperparameters on that mask.
fn select(cfg: &PipelineConfig, samples: &SampleSet) -> Result<Selection, ForecastError> {
    let (mask, ranking) = match cfg.mask {
        MaskChoice::Fixed(m) => (m, Vec::new()),
        MaskChoice::Search => {
            let ranking = feature_search(&cfg.model, samples, &cfg.cv)?;
            (ranking[0].mask, ranking)
        }
    };
    let grid = cfg
        .grid
        .as_ref()
        .map(|g| grid_search(g, mask, samples, &cfg.cv))
        .transpose()?;
    let params = grid.as_ref().map_or_else(|| cfg.model.clone(), |g| g.best.clone());
    Ok((params, mask, ranking, grid))
}

/// Mask and hyperparameters chosen on the training window of one day.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TuneReport {
    pub date: NaiveDate,
    pub samples: usize,
    pub mask: FeatureMask,
    pub params: ModelParams,
    /// All 127 masks by CV error when the mask was searched.
    pub mask_ranking: Vec<MaskScore>,
    pub grid: Option<GridResult>,
}

impl TuneReport {
    /// `base` with the selection fixed, so later runs skip the search.
    pub fn tuned_config(&self, base: &PipelineConfig) -> PipelineConfig {
        PipelineConfig {
            model: self.params.clone(),
            grid: None,
            mask: MaskChoice::Fixed(self.mask),
            ..base.clone()
        }
    }
}

/// Runs the mask and grid selection on the window the day-ahead model for
/// `date` would train on.
pub fn tune(
    config: &PipelineConfig,
    history: &FeatureSource<'_>,
    date: NaiveDate,
) -> Result<TuneReport, ForecastError> {
    let f = Forecaster::new(config.clone())?;
    f.check_history(history, date)?;
    let loads = history.loads.before(at_hour(date, 0));
    let past = FeatureSource {
        loads: &loads,
        ..*history
    };
    let samples = SampleSet::build(&past, f.training_hours(date, 0..24), None);
    if samples.is_empty() {
        return Err(ForecastError::Input(format!("no complete training rows before {date}")));
    }
    let (params, mask, mask_ranking, grid) = select(config, &samples)?;
    Ok(TuneReport {
        date,
        samples: samples.len(),
        mask,
        params,
        mask_ranking,
        grid,
    })
}

/// One-shot day-ahead forecast with a freshly trained model.
pub fn day_ahead_predict(
    config: &PipelineConfig,
    history: &FeatureSource<'_>,
    forecast_weather: &WeatherSeries,
    date: NaiveDate,
) -> Result<[f64; 24], ForecastError> {
    Forecaster::new(config.clone())?.day_ahead(history, forecast_weather, date)
}

/// One-shot mid-day re-forecast of hours `hour..24`.
pub fn midday_modify(
    config: &PipelineConfig,
    history: &FeatureSource<'_>,
    forecast_weather: &WeatherSeries,
    date: NaiveDate,
    hour: u32,
) -> Result<Vec<f64>, ForecastError> {
    Forecaster::new(config.clone())?.midday(history, forecast_weather, date, hour)
}

pub const PREDICTION_CSV_HEADER: [&str; 4] = ["timestamp", "predicted_kw", "issued_at", "variant"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictionRecord {
    pub timestamp: NaiveDateTime,
    pub predicted_kw: f64,
    pub issued_at: NaiveDateTime,
    pub variant: MiddayVariant,
}

pub fn write_predictions<W: Write>(out: W, rows: &[PredictionRecord]) -> Result<(), ForecastError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PREDICTION_CSV_HEADER)?;
    for r in rows {
        w.write_record([
            format_timestamp(r.timestamp),
            format!("{:.3}", r.predicted_kw),
            format_timestamp(r.issued_at),
            r.variant.id().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_predictions<R: Read>(input: R) -> Result<Vec<PredictionRecord>, ForecastError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header = rdr.headers()?.clone();
    if header.iter().ne(PREDICTION_CSV_HEADER) {
        return Err(ForecastError::Input(format!(
            "prediction header {:?}, expected {}",
            header.iter().collect::<Vec<_>>().join(","),
            PREDICTION_CSV_HEADER.join(",")
        )));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let ts = |k: usize| {
            parse_timestamp(&rec[k])
                .ok_or_else(|| ForecastError::Input(format!("line {line}: bad timestamp {:?}", &rec[k])))
        };
        let predicted_kw = rec[1]
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| ForecastError::Input(format!("line {line}: bad prediction {:?}", &rec[1])))?;
        rows.push(PredictionRecord {
            timestamp: ts(0)?,
            predicted_kw,
            issued_at: ts(2)?,
            variant: rec[3].parse()?,
        });
    }
    Ok(rows)
}
