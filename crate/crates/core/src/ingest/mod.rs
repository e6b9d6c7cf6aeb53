//! Hourly load, weather and calendar data.
//!
//! Series are validated on construction: timestamps sit on whole hours and are
//! strictly increasing, loads are non-negative, weather values are in range.
//! Missing hours are never filled in; [`LoadSeries::gaps`] and
//! [`WeatherSeries::gaps`] report them so callers can exclude the affected
//! samples.

mod calendar;
mod csvio;
mod provider;
mod synthetic;

use std::path::PathBuf;

use chrono::{Duration, NaiveDate, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use calendar::{mark_calendar, CalendarMark, HolidaySet};
pub use csvio::{
    bas_series_from_csv, format_timestamp, load_series_from_csv, parse_timestamp, read_bas_csv, read_load_csv,
    read_weather_csv, weather_series_from_csv, write_load_csv, write_weather_csv, LoadSelection, BAS_CSV_HEADER,
    LOAD_CSV_HEADER, WEATHER_CSV_HEADER,
};
pub use provider::{fetch_weather, FileWeatherProvider, HourRange, ProviderError, WeatherProvider};
pub use synthetic::{
    generate_synthetic_season, ClimateConfig, RegimeShift, SyntheticSeasonConfig, WeatherSensitivity, DIURNAL_PROFILE,
};

/// Water density used for chilled-water energy, kg/m³.
pub const WATER_DENSITY: f64 = 1000.0;
/// Specific heat of water, kJ/(kg·K).
pub const WATER_CP: f64 = 4.186;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("invalid measurement: {0}")]
    Validation(String),
    #[error("{path}:{line}: {message}")]
    Row { path: PathBuf, line: u64, message: String },
    #[error("{path}: unexpected header {found:?}, expected {expected:?}")]
    Header {
        path: PathBuf,
        found: String,
        expected: String,
    },
    #[error("duplicate timestamp {timestamp} (line {line})")]
    Duplicate { timestamp: NaiveDateTime, line: u64 },
    #[error("timestamps out of order at {0}")]
    Unordered(NaiveDateTime),
    #[error("timestamp {0} is not on a whole hour")]
    NotHourly(NaiveDateTime),
    #[error("bad date {0:?}")]
    BadDate(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// Cooling delivered by a chilled-water stream, in kW.
///
/// `flow_m3h` is the volumetric flow in m³/h; temperatures in °C.
pub fn compute_cooling_load(flow_m3h: f64, supply_c: f64, return_c: f64) -> Result<f64, IngestError> {
    if !flow_m3h.is_finite() || flow_m3h < 0.0 {
        return Err(IngestError::Validation(format!(
            "negative or non-finite flow {flow_m3h}"
        )));
    }
    if !(supply_c.is_finite() && return_c.is_finite()) || return_c < supply_c {
        return Err(IngestError::Validation(format!(
            "return temperature {return_c} below supply {supply_c} (sensor fault?)"
        )));
    }
    Ok(WATER_DENSITY * WATER_CP * flow_m3h * (return_c - supply_c) / 3600.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadRecord {
    pub timestamp: NaiveDateTime,
    pub building: String,
    /// kW, non-negative.
    pub cooling_load: f64,
}

/// Chronological hourly cooling-load series.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LoadSeries {
    records: Vec<LoadRecord>,
}

fn check_hourly(ts: NaiveDateTime) -> Result<(), IngestError> {
    if ts.minute() != 0 || ts.second() != 0 || ts.nanosecond() != 0 {
        return Err(IngestError::NotHourly(ts));
    }
    Ok(())
}

fn check_increasing<'a>(mut stamps: impl Iterator<Item = &'a NaiveDateTime>) -> Result<(), IngestError> {
    let Some(mut prev) = stamps.next() else {
        return Ok(());
    };
    check_hourly(*prev)?;
    for ts in stamps {
        check_hourly(*ts)?;
        if ts == prev {
            return Err(IngestError::Duplicate {
                timestamp: *ts,
                line: 0,
            });
        }
        if ts < prev {
            return Err(IngestError::Unordered(*ts));
        }
        prev = ts;
    }
    Ok(())
}

fn hour_gaps(stamps: &[NaiveDateTime]) -> Vec<NaiveDateTime> {
    let mut gaps = Vec::new();
    for pair in stamps.windows(2) {
        let mut t = pair[0] + Duration::hours(1);
        while t < pair[1] {
            gaps.push(t);
            t += Duration::hours(1);
        }
    }
    gaps
}

impl LoadSeries {
    /// Builds a series from records already in chronological order.
    pub fn new(records: Vec<LoadRecord>) -> Result<Self, IngestError> {
        for r in &records {
            if !r.cooling_load.is_finite() || r.cooling_load < 0.0 {
                return Err(IngestError::Validation(format!(
                    "cooling load {} at {} must be finite and >= 0",
                    r.cooling_load, r.timestamp
                )));
            }
        }
        check_increasing(records.iter().map(|r| &r.timestamp))?;
        Ok(Self { records })
    }

    /// Convenience constructor for a contiguous hourly run starting at `start`.
    pub fn from_values(building: &str, start: NaiveDateTime, values: &[f64]) -> Result<Self, IngestError> {
        let records = values
            .iter()
            .enumerate()
            .map(|(i, &v)| LoadRecord {
                timestamp: start + Duration::hours(i as i64),
                building: building.to_string(),
                cooling_load: v,
            })
            .collect();
        Self::new(records)
    }

    pub fn records(&self) -> &[LoadRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn first_timestamp(&self) -> Option<NaiveDateTime> {
        self.records.first().map(|r| r.timestamp)
    }

    pub fn last_timestamp(&self) -> Option<NaiveDateTime> {
        self.records.last().map(|r| r.timestamp)
    }

    pub fn load_at(&self, ts: NaiveDateTime) -> Option<f64> {
        self.records
            .binary_search_by(|r| r.timestamp.cmp(&ts))
            .ok()
            .map(|i| self.records[i].cooling_load)
    }

    /// All 24 loads of `date`, or `None` if any hour is missing.
    pub fn day(&self, date: NaiveDate) -> Option<[f64; 24]> {
        let start = date.and_hms_opt(0, 0, 0)?;
        let i = self.records.binary_search_by(|r| r.timestamp.cmp(&start)).ok()?;
        let slice = self.records.get(i..i + 24)?;
        let mut out = [0.0; 24];
        for (h, r) in slice.iter().enumerate() {
            if r.timestamp != start + Duration::hours(h as i64) {
                return None;
            }
            out[h] = r.cooling_load;
        }
        Some(out)
    }

    /// Hours missing between the first and last record.
    pub fn gaps(&self) -> Vec<NaiveDateTime> {
        let stamps: Vec<_> = self.records.iter().map(|r| r.timestamp).collect();
        hour_gaps(&stamps)
    }

    /// Records with `timestamp < end`.
    pub fn before(&self, end: NaiveDateTime) -> LoadSeries {
        let n = self.records.partition_point(|r| r.timestamp < end);
        LoadSeries {
            records: self.records[..n].to_vec(),
        }
    }

    /// Appends records that come strictly after the current last record.
    /// On error the series is left unchanged.
    pub fn extend(&mut self, more: impl IntoIterator<Item = LoadRecord>) -> Result<(), IngestError> {
        let mut records = self.records.clone();
        records.extend(more);
        *self = LoadSeries::new(records)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Measured or reanalysis weather, used for training.
    Historical,
    /// Forecast weather, used when issuing predictions.
    Forecast,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeatherRecord {
    pub timestamp: NaiveDateTime,
    /// °C
    pub temperature: f64,
    /// %, 0..=100
    pub relative_humidity: f64,
    /// W/m²
    pub direct_solar: f64,
    /// m/s
    pub wind_speed: f64,
}

impl WeatherRecord {
    fn validate(&self) -> Result<(), String> {
        if !self.temperature.is_finite() {
            return Err(format!("temperature {} not finite", self.temperature));
        }
        if !(0.0..=100.0).contains(&self.relative_humidity) {
            return Err(format!("relative humidity {} outside [0, 100]", self.relative_humidity));
        }
        if !(self.direct_solar.is_finite() && self.direct_solar >= 0.0) {
            return Err(format!("solar radiation {} must be >= 0", self.direct_solar));
        }
        if !(self.wind_speed.is_finite() && self.wind_speed >= 0.0) {
            return Err(format!("wind speed {} must be >= 0", self.wind_speed));
        }
        Ok(())
    }
}

/// Chronological hourly weather with a provenance tag.
#[derive(Debug, Clone, PartialEq)]
pub struct WeatherSeries {
    provenance: Provenance,
    records: Vec<WeatherRecord>,
}

impl WeatherSeries {
    pub fn new(provenance: Provenance, records: Vec<WeatherRecord>) -> Result<Self, IngestError> {
        for r in &records {
            r.validate()
                .map_err(|m| IngestError::Validation(format!("{} at {}", m, r.timestamp)))?;
        }
        check_increasing(records.iter().map(|r| &r.timestamp))?;
        Ok(Self { provenance, records })
    }

    pub fn empty(provenance: Provenance) -> Self {
        Self {
            provenance,
            records: Vec::new(),
        }
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn records(&self) -> &[WeatherRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn at(&self, ts: NaiveDateTime) -> Option<&WeatherRecord> {
        self.records
            .binary_search_by(|r| r.timestamp.cmp(&ts))
            .ok()
            .map(|i| &self.records[i])
    }

    pub fn gaps(&self) -> Vec<NaiveDateTime> {
        let stamps: Vec<_> = self.records.iter().map(|r| r.timestamp).collect();
        hour_gaps(&stamps)
    }

    /// Records inside `[start, end)`.
    pub fn slice(&self, start: NaiveDateTime, end: NaiveDateTime) -> WeatherSeries {
        let a = self.records.partition_point(|r| r.timestamp < start);
        let b = self.records.partition_point(|r| r.timestamp < end);
        WeatherSeries {
            provenance: self.provenance,
            records: self.records[a..b].to_vec(),
        }
    }
}
