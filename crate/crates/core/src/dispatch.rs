//! Hourly ice/chiller decisions.
//!
//! [`plan_day`] walks the hour sequence and gives each hour stored ice while
//! the remaining ice covers its whole predicted load. What happens at the
//! first hour that does not fit is set by [`AllocationRule`]: the default
//! stops there and leaves every later hour to the chillers, which keeps the
//! plan monotone in the amount of stored ice; the alternative skips the hour
//! and keeps offering ice to later, smaller loads.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tariff::HourSequence;

#[derive(Debug, Error)]
pub enum DispatchError {
    #[error("no predicted load for hour {0}")]
    MissingLoad(u32),
    #[error("predicted load {load} for hour {hour} must be finite and >= 0")]
    BadLoad { hour: u32, load: f64 },
    #[error("hour {0} is not part of the plan")]
    HourNotInPlan(u32),
    #[error("month {0} is outside the cooling season (May..October)")]
    OutOfSeason(u32),
    #[error("invalid ice state: {0}")]
    IceState(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    /// Serve the hour from stored ice (code 0).
    Ice,
    /// Serve the hour with chillers (code 1).
    Chiller,
}

impl Decision {
    pub fn code(self) -> u8 {
        match self {
            Decision::Ice => 0,
            Decision::Chiller => 1,
        }
    }
}

/// Stored ice, kWh of cooling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IceState {
    pub stored_kwh: f64,
    pub capacity_kwh: f64,
}

impl IceState {
    pub const DEFAULT_CAPACITY_KWH: f64 = 76_000.0;

    pub fn new(stored_kwh: f64, capacity_kwh: f64) -> Result<Self, DispatchError> {
        if !(capacity_kwh.is_finite() && capacity_kwh > 0.0) {
            return Err(DispatchError::IceState(format!("capacity {capacity_kwh} must be > 0")));
        }
        if !(stored_kwh.is_finite() && (0.0..=capacity_kwh).contains(&stored_kwh)) {
            return Err(DispatchError::IceState(format!(
                "stored {stored_kwh} outside [0, {capacity_kwh}]"
            )));
        }
        Ok(Self {
            stored_kwh,
            capacity_kwh,
        })
    }

    pub fn empty(capacity_kwh: f64) -> Self {
        Self {
            stored_kwh: 0.0,
            capacity_kwh,
        }
    }

    pub fn full(capacity_kwh: f64) -> Self {
        Self {
            stored_kwh: capacity_kwh,
            capacity_kwh,
        }
    }

    pub fn headroom(&self) -> f64 {
        (self.capacity_kwh - self.stored_kwh).max(0.0)
    }
}

/// Decisions for the day's non-off-peak hours.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ControlSeries {
    decisions: BTreeMap<u32, Decision>,
}

impl ControlSeries {
    pub fn new(decisions: BTreeMap<u32, Decision>) -> Self {
        Self { decisions }
    }

    pub fn get(&self, hour: u32) -> Option<Decision> {
        self.decisions.get(&hour).copied()
    }

    pub fn hours(&self) -> impl Iterator<Item = u32> + '_ {
        self.decisions.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, Decision)> + '_ {
        self.decisions.iter().map(|(h, d)| (*h, *d))
    }

    pub fn len(&self) -> usize {
        self.decisions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.decisions.is_empty()
    }

    pub fn ice_hours(&self) -> Vec<u32> {
        self.iter()
            .filter(|(_, d)| *d == Decision::Ice)
            .map(|(h, _)| h)
            .collect()
    }

    pub fn chiller_hours(&self) -> Vec<u32> {
        self.iter()
            .filter(|(_, d)| *d == Decision::Chiller)
            .map(|(h, _)| h)
            .collect()
    }

    /// Ice each ice hour is expected to use under `loads`.
    pub fn planned_ice(&self, loads: &[f64]) -> BTreeMap<u32, f64> {
        self.iter()
            .filter(|(_, d)| *d == Decision::Ice)
            .map(|(h, _)| (h, loads.get(h as usize).copied().unwrap_or(0.0)))
            .collect()
    }
}

fn load_for(loads: &[f64], hour: u32) -> Result<f64, DispatchError> {
    let load = *loads.get(hour as usize).ok_or(DispatchError::MissingLoad(hour))?;
    if !(load.is_finite() && load >= 0.0) {
        return Err(DispatchError::BadLoad { hour, load });
    }
    Ok(load)
}

/// Behaviour at the first hour whose predicted load exceeds the remaining ice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AllocationRule {
    /// Every hour from the shortfall on goes to the chillers. More ice never
    /// turns an ice hour into a chiller hour.
    #[default]
    StopAtShortfall,
    /// Skip the hour and keep allocating to later hours that still fit.
    SkipAndContinue,
}

/// Rule-based daily plan with the default [`AllocationRule`].
/// `predicted_loads` is indexed by hour of day (kW, equal to kWh over the hour).
pub fn plan_day(
    ice: &IceState,
    predicted_loads: &[f64],
    hour_seq: &HourSequence,
) -> Result<ControlSeries, DispatchError> {
    plan_day_with(AllocationRule::default(), ice, predicted_loads, hour_seq)
}

pub fn plan_day_with(
    rule: AllocationRule,
    ice: &IceState,
    predicted_loads: &[f64],
    hour_seq: &HourSequence,
) -> Result<ControlSeries, DispatchError> {
    let mut remaining = ice.stored_kwh;
    let mut stopped = false;
    let mut decisions = BTreeMap::new();
    for &h in hour_seq.hours() {
        let load = load_for(predicted_loads, h)?;
        let d = if !stopped && remaining >= load {
            remaining -= load;
            Decision::Ice
        } else {
            stopped = rule == AllocationRule::StopAtShortfall;
            Decision::Chiller
        };
        decisions.insert(h, d);
    }
    Ok(ControlSeries { decisions })
}

/// Re-plans the hours from `current_hour` on with the measured ice and
/// updated predictions. Earlier hours keep their executed decisions.
pub fn adjust_midday(
    prior: &ControlSeries,
    current_hour: u32,
    ice_now: &IceState,
    updated_loads: &[f64],
    hour_seq: &HourSequence,
) -> Result<ControlSeries, DispatchError> {
    adjust_midday_with(
        AllocationRule::default(),
        prior,
        current_hour,
        ice_now,
        updated_loads,
        hour_seq,
    )
}

pub fn adjust_midday_with(
    rule: AllocationRule,
    prior: &ControlSeries,
    current_hour: u32,
    ice_now: &IceState,
    updated_loads: &[f64],
    hour_seq: &HourSequence,
) -> Result<ControlSeries, DispatchError> {
    if prior.get(current_hour).is_none() {
        return Err(DispatchError::HourNotInPlan(current_hour));
    }
    let future = plan_day_with(rule, ice_now, updated_loads, &hour_seq.from_hour(current_hour))?;
    let mut decisions = prior.decisions.clone();
    for (h, d) in future.iter() {
        decisions.insert(h, d);
    }
    Ok(ControlSeries { decisions })
}

/// Current operating calendar of the plant, used as the baseline.
pub fn fixed_schedule(month: u32) -> Result<ControlSeries, DispatchError> {
    let chiller_hours: &[u32] = match month {
        7 | 8 => &[7, 8, 9, 15, 17, 22],
        5 | 6 | 9 | 10 => &[7, 22],
        _ => return Err(DispatchError::OutOfSeason(month)),
    };
    let decisions = (7..=22)
        .map(|h| {
            let d = if chiller_hours.contains(&h) {
                Decision::Chiller
            } else {
                Decision::Ice
            };
            (h, d)
        })
        .collect();
    Ok(ControlSeries { decisions })
}

/// Planned ice-making energy per off-peak hour, in execution order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ChargePlan {
    pub entries: Vec<(u32, f64)>,
}

impl ChargePlan {
    pub fn get(&self, hour: u32) -> f64 {
        self.entries.iter().find(|(h, _)| *h == hour).map_or(0.0, |(_, e)| *e)
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|(_, e)| e).sum()
    }

    /// The entries for `hours` only, keeping order.
    pub fn restricted_to(&self, hours: &[u32]) -> ChargePlan {
        ChargePlan {
            entries: self
                .entries
                .iter()
                .copied()
                .filter(|(h, _)| hours.contains(h))
                .collect(),
        }
    }
}

/// Fills the tank as fast as the ice-making capacity allows, hour by hour in
/// the given order, until it is full or the hours run out.
pub fn plan_night_charge(ice: &IceState, max_charge_kw: f64, hours: &[u32]) -> ChargePlan {
    let mut level = ice.stored_kwh;
    let entries = hours
        .iter()
        .map(|&h| {
            let e = max_charge_kw.max(0.0).min((ice.capacity_kwh - level).max(0.0));
            level += e;
            (h, e)
        })
        .collect();
    ChargePlan { entries }
}
