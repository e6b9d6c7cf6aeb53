//! Weather provider interface.
//!
//! A provider answers `(hour range, location key)` with hourly records and a
//! provenance tag. Only the file-backed stub ships; an HTTP binding would
//! serve the same records as a JSON array of objects with the weather CSV
//! column names as keys.

use std::path::PathBuf;

use chrono::{Duration, NaiveDateTime};
use thiserror::Error;

use super::{weather_series_from_csv, IngestError, Provenance, WeatherSeries};

#[derive(Debug, Error)]
pub enum ProviderError {
    /// Transient failure; the caller may retry.
    #[error("weather provider unavailable: {0}")]
    Unavailable(String),
    #[error("weather provider is missing {} hour(s): {}", .0.len(), format_hours(.0))]
    Gaps(Vec<NaiveDateTime>),
    #[error(transparent)]
    Data(#[from] IngestError),
}

impl ProviderError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, ProviderError::Unavailable(_))
    }
}

fn format_hours(hours: &[NaiveDateTime]) -> String {
    hours
        .iter()
        .map(|h| h.format("%Y-%m-%dT%H:00").to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

/// Half-open hourly range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HourRange {
    pub start: NaiveDateTime,
    pub end: NaiveDateTime,
}

impl HourRange {
    pub fn new(start: NaiveDateTime, end: NaiveDateTime) -> Self {
        Self { start, end }
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn hours(&self) -> impl Iterator<Item = NaiveDateTime> {
        let (start, end) = (self.start, self.end);
        (0..)
            .map(move |i| start + Duration::hours(i))
            .take_while(move |t| *t < end)
    }
}

pub trait WeatherProvider {
    fn fetch(&self, range: &HourRange, location: &str) -> Result<WeatherSeries, ProviderError>;
}

/// Serves weather from a CSV in the weather file format. The location key is
/// ignored: one file holds one site.
#[derive(Debug, Clone)]
pub struct FileWeatherProvider {
    path: PathBuf,
    provenance: Provenance,
}

impl FileWeatherProvider {
    pub fn new(path: impl Into<PathBuf>, provenance: Provenance) -> Self {
        Self {
            path: path.into(),
            provenance,
        }
    }
}

impl WeatherProvider for FileWeatherProvider {
    fn fetch(&self, range: &HourRange, _location: &str) -> Result<WeatherSeries, ProviderError> {
        if range.is_empty() {
            return Ok(WeatherSeries::empty(self.provenance));
        }
        if !self.path.exists() {
            return Err(ProviderError::Unavailable(format!("{} not found", self.path.display())));
        }
        let all = weather_series_from_csv(&self.path, self.provenance)?;
        Ok(all.slice(range.start, range.end))
    }
}

/// Fetches weather for `range` and insists on one record per hour.
pub fn fetch_weather(
    provider: &dyn WeatherProvider,
    range: &HourRange,
    location: &str,
) -> Result<WeatherSeries, ProviderError> {
    let series = provider.fetch(range, location)?;
    let missing: Vec<NaiveDateTime> = range.hours().filter(|t| series.at(*t).is_none()).collect();
    if !missing.is_empty() {
        return Err(ProviderError::Gaps(missing));
    }
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::parse_timestamp;
    use std::io::Write;

    fn stub(skip: &[u32]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "timestamp,temp_c,rh_pct,solar_wm2,wind_ms").unwrap();
        for h in 0..24 {
            if skip.contains(&h) {
                continue;
            }
            writeln!(f, "2021-07-21T{h:02}:00,{},60,0,2", 25 + h % 5).unwrap();
        }
        f
    }

    fn day_range() -> HourRange {
        HourRange::new(
            parse_timestamp("2021-07-21T00:00").unwrap(),
            parse_timestamp("2021-07-22T00:00").unwrap(),
        )
    }

    #[test]
    fn full_coverage() {
        let f = stub(&[]);
        let p = FileWeatherProvider::new(f.path(), Provenance::Forecast);
        let w = fetch_weather(&p, &day_range(), "beijing").unwrap();
        assert_eq!(w.len(), 24);
        assert_eq!(w.provenance(), Provenance::Forecast);
    }

    #[test]
    fn missing_hours_named() {
        let f = stub(&[3, 4, 17]);
        let p = FileWeatherProvider::new(f.path(), Provenance::Forecast);
        match fetch_weather(&p, &day_range(), "beijing") {
            Err(ProviderError::Gaps(h)) => {
                assert_eq!(h.len(), 3);
                assert_eq!(h[2], parse_timestamp("2021-07-21T17:00").unwrap());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_range_and_unavailable() {
        let p = FileWeatherProvider::new("/nonexistent/weather.csv", Provenance::Forecast);
        let t = parse_timestamp("2021-07-21T00:00").unwrap();
        assert!(fetch_weather(&p, &HourRange::new(t, t), "x").unwrap().is_empty());
        let err = fetch_weather(&p, &day_range(), "x").unwrap_err();
        assert!(err.is_retryable());
    }
}
