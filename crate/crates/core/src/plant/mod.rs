//! Hourly electricity model of the chiller plant and ice tank.
//!
//! Chillers follow a quadratic COP surface ([`cop`]). Cooling towers and pumps
//! draw their rated power whenever their loop is active. [`simulate_day`]
//! chains [`simulate_hour`] over a calendar day and prices the result under
//! the tariff; [`calibrate`] fits the COP surface to measured daily totals.

mod calibrate;
mod cop;
mod sim;

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use calibrate::{calibrate, CalibrationOptions, CalibrationResult, OperatingDay};
pub use cop::{chiller_cop, CopCoefficients, T_CHW_RANGE, T_CW_RANGE};
pub use sim::{
    energy_cost, simulate_day, simulate_hour, write_hourly_csv, DayResult, DaySimulator, HourMode, HourResult,
    SimOptions, HOURLY_CSV_HEADER,
};

use crate::tariff::TariffError;

#[derive(Debug, Error)]
pub enum PlantError {
    #[error("invalid plant config: {0}")]
    Config(String),
    #[error("operating point outside the COP envelope: {0}")]
    Envelope(String),
    #[error("invalid simulation input: {0}")]
    Input(String),
    #[error("no decision for daytime hour {0}")]
    MissingDecision(u32),
    #[error("calibration is underdetermined: {observations} day(s) for {parameters} free parameter(s)")]
    Underdetermined { observations: usize, parameters: usize },
    #[error("calibration failed: {0}")]
    Calibration(String),
    #[error(transparent)]
    Tariff(#[from] TariffError),
    #[error("{path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("plant JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChillerGroup {
    pub count: u32,
    pub capacity_kw: f64,
    pub cop: CopCoefficients,
}

/// Chillers that can also make ice, at reduced capacity and COP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DuplexGroup {
    pub count: u32,
    pub capacity_kw: f64,
    pub cop: CopCoefficients,
    /// Ice-making capacity as a fraction of the chilled-water capacity.
    pub ice_capacity_derate: f64,
    /// Ice-making COP as a fraction of the surface value.
    pub ice_cop_derate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TankConfig {
    pub capacity_kwh: f64,
    pub max_charge_kw: f64,
    pub max_discharge_kw: f64,
    /// Fraction of the stored ice lost per hour.
    pub standing_loss_per_hour: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TowerConfig {
    pub count: u32,
    pub rated_kw: f64,
}

/// Rated power of each pump loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpConfig {
    pub chilled_kw: f64,
    pub cooling_kw: f64,
    pub glycol_kw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignTemperatures {
    pub chilled_supply_c: f64,
    pub chilled_return_c: f64,
    pub cooling_water_c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantConfig {
    pub duplex: DuplexGroup,
    pub normal: ChillerGroup,
    pub tank: TankConfig,
    pub towers: TowerConfig,
    pub pumps: PumpConfig,
    pub design: DesignTemperatures,
}

impl Default for PlantConfig {
    fn default() -> Self {
        PlantConfig {
            duplex: DuplexGroup {
                count: 3,
                capacity_kw: 4395.0,
                cop: CopCoefficients::default(),
                ice_capacity_derate: 0.65,
                ice_cop_derate: 0.7,
            },
            normal: ChillerGroup {
                count: 1,
                capacity_kw: 1406.0,
                cop: CopCoefficients::default(),
            },
            tank: TankConfig {
                capacity_kwh: 76_000.0,
                max_charge_kw: 8570.0,
                max_discharge_kw: 12_000.0,
                standing_loss_per_hour: 0.0,
            },
            towers: TowerConfig {
                count: 4,
                rated_kw: 37.0,
            },
            pumps: PumpConfig {
                chilled_kw: 110.0,
                cooling_kw: 132.0,
                glycol_kw: 75.0,
            },
            design: DesignTemperatures {
                chilled_supply_c: 7.0,
                chilled_return_c: 12.0,
                cooling_water_c: 32.0,
            },
        }
    }
}

fn positive(name: &str, v: f64) -> Result<(), PlantError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(PlantError::Config(format!("{name} must be > 0, got {v}")))
    }
}

impl PlantConfig {
    pub fn validate(&self) -> Result<(), PlantError> {
        if self.duplex.count == 0 || self.normal.count == 0 || self.towers.count == 0 {
            return Err(PlantError::Config("chiller and tower counts must be > 0".into()));
        }
        positive("duplex.capacity_kw", self.duplex.capacity_kw)?;
        positive("normal.capacity_kw", self.normal.capacity_kw)?;
        positive("tank.capacity_kwh", self.tank.capacity_kwh)?;
        positive("tank.max_charge_kw", self.tank.max_charge_kw)?;
        positive("tank.max_discharge_kw", self.tank.max_discharge_kw)?;
        positive("towers.rated_kw", self.towers.rated_kw)?;
        positive("pumps.chilled_kw", self.pumps.chilled_kw)?;
        positive("pumps.cooling_kw", self.pumps.cooling_kw)?;
        positive("pumps.glycol_kw", self.pumps.glycol_kw)?;
        for (name, d) in [
            ("duplex.ice_capacity_derate", self.duplex.ice_capacity_derate),
            ("duplex.ice_cop_derate", self.duplex.ice_cop_derate),
        ] {
            if !(d > 0.0 && d <= 1.0) {
                return Err(PlantError::Config(format!("{name} must be in (0, 1], got {d}")));
            }
        }
        let loss = self.tank.standing_loss_per_hour;
        if !(0.0..1.0).contains(&loss) {
            return Err(PlantError::Config(format!(
                "tank.standing_loss_per_hour must be in [0, 1), got {loss}"
            )));
        }
        let d = &self.design;
        if !(T_CW_RANGE.0..=T_CW_RANGE.1).contains(&d.cooling_water_c)
            || !(T_CHW_RANGE.0..=T_CHW_RANGE.1).contains(&d.chilled_supply_c)
            || d.chilled_return_c <= d.chilled_supply_c
        {
            return Err(PlantError::Config(format!("design temperatures out of range: {d:?}")));
        }
        self.duplex.cop.validate()?;
        self.normal.cop.validate()?;
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, PlantError> {
        let cfg: PlantConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, PlantError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| PlantError::Read {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plant config serializes")
    }

    /// Cooling the chillers can deliver in normal mode, kW.
    pub fn chiller_capacity_kw(&self) -> f64 {
        self.normal.count as f64 * self.normal.capacity_kw + self.duplex.count as f64 * self.duplex.capacity_kw
    }

    /// Ice-making rate with every duplex unit in ice mode, capped by the tank.
    pub fn max_charge_rate_kw(&self) -> f64 {
        let making = self.duplex.count as f64 * self.duplex.capacity_kw * self.duplex.ice_capacity_derate;
        making.min(self.tank.max_charge_kw)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let p = PlantConfig::default();
        p.validate().unwrap();
        assert_eq!(p.chiller_capacity_kw(), 1406.0 + 3.0 * 4395.0);
        assert_eq!(p.max_charge_rate_kw(), 8570.0);
    }

    #[test]
    fn json_round_trip() {
        let p = PlantConfig::default();
        let back = PlantConfig::from_json(&p.to_json()).unwrap();
        assert_eq!(p, back);
    }

    #[test]
    fn rejects_bad_values() {
        let mut p = PlantConfig::default();
        p.duplex.ice_cop_derate = 1.5;
        assert!(p.validate().is_err());
        let mut p = PlantConfig::default();
        p.tank.standing_loss_per_hour = 1.0;
        assert!(p.validate().is_err());
        let mut p = PlantConfig::default();
        p.towers.rated_kw = 0.0;
        assert!(p.validate().is_err());
        assert!(PlantConfig::from_json(r#"{"duplex": 1}"#).is_err());
    }
}
