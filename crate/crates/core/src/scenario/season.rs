//! Season run configuration and the on-disk data directory.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{ScenarioError, ScenarioOptions, SeasonData};
use crate::forecast::PipelineConfig;
use crate::ingest::{
    load_series_from_csv, weather_series_from_csv, write_load_csv, write_weather_csv, HolidaySet, LoadSelection,
    Provenance, SyntheticSeasonConfig,
};
use crate::plant::PlantConfig;
use crate::tariff::TariffSchedule;

/// Files of a data directory: loads, training weather, forecast weather and
/// the holiday list. Only the first two are required when reading.
pub const DATA_FILES: [&str; 4] = ["loads.csv", "weather.csv", "forecast_weather.csv", "holidays.txt"];

/// Config files a season run combines. Relative paths are resolved against
/// the directory of the season file; absent entries use built-in defaults.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeasonFiles {
    pub pipeline: Option<PathBuf>,
    pub plant: Option<PathBuf>,
    pub tariff: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeasonConfig {
    /// Generator settings for `synth`; the first days serve as forecast history.
    pub synthetic: SyntheticSeasonConfig,
    /// First evaluated day.
    pub eval_start: NaiveDate,
    /// Last evaluated day, inclusive; the end of the data when absent.
    #[serde(default)]
    pub eval_end: Option<NaiveDate>,
    #[serde(default)]
    pub options: ScenarioOptions,
    #[serde(default)]
    pub files: SeasonFiles,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ScenarioError + '_ {
    move |source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    }
}

impl SeasonConfig {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.synthetic.validate().map_err(ScenarioError::Input)?;
        if let Some(end) = self.eval_end {
            if end < self.eval_start {
                return Err(ScenarioError::Input(format!(
                    "eval_end {end} before eval_start {}",
                    self.eval_start
                )));
            }
        }
        if self.options.initial_ice_kwh < 0.0 {
            return Err(ScenarioError::Input("initial_ice_kwh must be >= 0".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let cfg: SeasonConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a season file and makes its referenced paths absolute.
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let mut cfg = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.files.pipeline, &mut cfg.files.plant, &mut cfg.files.tariff]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("season config serializes")
    }

    pub fn pipeline(&self) -> Result<PipelineConfig, ScenarioError> {
        match &self.files.pipeline {
            None => Ok(PipelineConfig::default()),
            Some(p) => Ok(PipelineConfig::from_json(
                &std::fs::read_to_string(p).map_err(io_err(p))?,
            )?),
        }
    }

    pub fn plant(&self) -> Result<PlantConfig, ScenarioError> {
        match &self.files.plant {
            None => Ok(PlantConfig::default()),
            Some(p) => Ok(PlantConfig::from_path(p)?),
        }
    }

    pub fn tariff(&self) -> Result<TariffSchedule, ScenarioError> {
        match &self.files.tariff {
            None => Ok(TariffSchedule::beijing_2021()),
            Some(p) => Ok(TariffSchedule::from_path(p)?),
        }
    }

    /// Generates the synthetic season in memory.
    pub fn synthetic_data(&self) -> Result<SeasonData, ScenarioError> {
        let mut data = SeasonData::synthetic(&self.synthetic, self.eval_start)?;
        if let Some(end) = self.eval_end {
            data.end = data.end.min(end);
        }
        Ok(data)
    }

    /// Reads a data directory over this config's evaluation range.
    pub fn read_data(&self, dir: impl AsRef<Path>) -> Result<SeasonData, ScenarioError> {
        SeasonData::from_dir(dir, self.eval_start, self.eval_end)
    }
}

impl SeasonData {
    /// Writes the files of [`DATA_FILES`] into `dir`, creating it if needed.
    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>, ScenarioError> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        let paths: Vec<PathBuf> = DATA_FILES.iter().map(|f| dir.join(f)).collect();
        let create = |p: &Path| File::create(p).map(BufWriter::new).map_err(io_err(p));
        write_load_csv(&self.loads, create(&paths[0])?)?;
        write_weather_csv(&self.weather, create(&paths[1])?)?;
        write_weather_csv(&self.forecast_weather, create(&paths[2])?)?;
        std::fs::write(&paths[3], self.holidays.to_text()).map_err(io_err(&paths[3]))?;
        Ok(paths)
    }

    /// Reads a data directory. Forecast weather defaults to the training
    /// weather and the holiday list to empty. `end` defaults to the last day
    /// with a load record.
    pub fn from_dir(
        dir: impl AsRef<Path>,
        start: NaiveDate,
        end: Option<NaiveDate>,
    ) -> Result<SeasonData, ScenarioError> {
        let dir = dir.as_ref();
        let path = |i: usize| dir.join(DATA_FILES[i]);
        let loads = load_series_from_csv(path(0), &LoadSelection::All)?;
        let weather = weather_series_from_csv(path(1), Provenance::Historical)?;
        let forecast_weather = if path(2).exists() {
            weather_series_from_csv(path(2), Provenance::Forecast)?
        } else {
            weather.clone().with_provenance(Provenance::Forecast)
        };
        let holidays = if path(3).exists() {
            HolidaySet::from_file(path(3))?
        } else {
            HolidaySet::default()
        };
        let last = loads
            .last_timestamp()
            .ok_or_else(|| ScenarioError::Input(format!("{} holds no load records", path(0).display())))?
            .date();
        let end = end.map_or(last, |e| e.min(last));
        if end < start {
            return Err(ScenarioError::Input(format!(
                "loads end {last}, before the evaluation start {start}"
            )));
        }
        Ok(SeasonData {
            loads,
            weather,
            forecast_weather,
            holidays,
            start,
            end,
        })
    }
}
