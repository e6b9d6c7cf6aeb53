use std::io::Write;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::cop::chiller_cop;
use super::{CopCoefficients, PlantConfig, PlantError};
use crate::dispatch::{plan_night_charge, ChargePlan, ControlSeries, Decision, IceState};
use crate::tariff::TariffSchedule;

/// What the plant is asked to do in one hour.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HourMode {
    /// Daytime hour: serve the load from ice or from chillers.
    Dispatch(Decision),
    /// Off-peak hour: make up to `target_kwh` of ice while chillers serve the load.
    Charging { target_kwh: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HourResult {
    pub hour: u32,
    pub mode: HourMode,
    pub load_kwh: f64,
    pub chiller_kwh: f64,
    pub tower_kwh: f64,
    pub pump_kwh: f64,
    pub charge_kwh: f64,
    pub discharge_kwh: f64,
    pub loss_kwh: f64,
    /// `charge - discharge - loss`.
    pub ice_delta_kwh: f64,
    pub ice_end_kwh: f64,
    pub unmet_kwh: f64,
    pub chillers_on: u32,
    pub cost_rmb: f64,
}

impl HourResult {
    pub fn total_kwh(&self) -> f64 {
        self.chiller_kwh + self.tower_kwh + self.pump_kwh
    }
}

#[derive(Debug, Default)]
struct Staging {
    electricity: f64,
    served: f64,
    units: u32,
    /// Cooling delivered by duplex units in chilled-water mode.
    duplex_served: f64,
}

#[allow(clippy::too_many_arguments)]
fn run_units(
    st: &mut Staging,
    remaining: &mut f64,
    count: u32,
    capacity: f64,
    cop: &CopCoefficients,
    cop_scale: f64,
    t_cw: f64,
    t_chw: f64,
) -> Result<(), PlantError> {
    for _ in 0..count {
        if *remaining <= 1e-9 {
            break;
        }
        let q = remaining.min(capacity);
        let c = chiller_cop(cop, t_cw, t_chw, q / capacity)? * cop_scale;
        st.electricity += q / c;
        st.served += q;
        st.units += 1;
        *remaining -= q;
    }
    Ok(())
}

/// Normal chiller first, then duplex units in order; the last unit runs at
/// part load.
fn stage_chillers(plant: &PlantConfig, load: f64, t_cw: f64) -> Result<Staging, PlantError> {
    let mut st = Staging::default();
    let mut remaining = load;
    let t_chw = plant.design.chilled_supply_c;
    let n = &plant.normal;
    run_units(
        &mut st,
        &mut remaining,
        n.count,
        n.capacity_kw,
        &n.cop,
        1.0,
        t_cw,
        t_chw,
    )?;
    let before = st.served;
    let d = &plant.duplex;
    run_units(
        &mut st,
        &mut remaining,
        d.count,
        d.capacity_kw,
        &d.cop,
        1.0,
        t_cw,
        t_chw,
    )?;
    st.duplex_served = st.served - before;
    Ok(st)
}

fn check_input(name: &str, v: f64) -> Result<(), PlantError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(PlantError::Input(format!("{name} must be finite and >= 0, got {v}")))
    }
}

/// One hour of plant operation at cooling-water temperature `t_cw`.
///
/// Loads above what ice and chillers can deliver come back as `unmet_kwh`.
pub fn simulate_hour(
    plant: &PlantConfig,
    ice: &IceState,
    hour: u32,
    load_kw: f64,
    mode: HourMode,
    t_cw: f64,
) -> Result<(HourResult, IceState), PlantError> {
    check_input("load", load_kw)?;
    if hour > 23 {
        return Err(PlantError::Input(format!("hour {hour} outside 0..=23")));
    }
    let capacity = ice.capacity_kwh;
    let mut stored = ice.stored_kwh;
    if !(capacity > 0.0 && (0.0..=capacity).contains(&stored)) {
        return Err(PlantError::Input(format!("ice state {stored} / {capacity} is invalid")));
    }

    let mut charge = 0.0;
    let mut discharge = 0.0;
    let staging;
    let mut ice_units = 0;
    let mut ice_electricity = 0.0;
    match mode {
        HourMode::Dispatch(Decision::Ice) => {
            discharge = load_kw.min(stored).min(plant.tank.max_discharge_kw);
            stored -= discharge;
            staging = stage_chillers(plant, load_kw - discharge, t_cw)?;
        }
        HourMode::Dispatch(Decision::Chiller) => {
            staging = stage_chillers(plant, load_kw, t_cw)?;
        }
        HourMode::Charging { target_kwh } => {
            check_input("charge target", target_kwh)?;
            staging = stage_chillers(plant, load_kw, t_cw)?;
            let d = &plant.duplex;
            let free_units = (d.count as f64 - staging.duplex_served / d.capacity_kw).max(0.0);
            let unit_ice_kw = d.capacity_kw * d.ice_capacity_derate;
            let available = (free_units * unit_ice_kw).min(plant.tank.max_charge_kw);
            charge = target_kwh.min(available).min(capacity - stored).max(0.0);
            if charge > 1e-9 {
                let mut st = Staging::default();
                let mut remaining = charge;
                run_units(
                    &mut st,
                    &mut remaining,
                    d.count,
                    unit_ice_kw,
                    &d.cop,
                    d.ice_cop_derate,
                    t_cw,
                    plant.design.chilled_supply_c,
                )?;
                ice_units = st.units;
                ice_electricity = st.electricity;
            } else {
                charge = 0.0;
            }
            stored += charge;
        }
    }
    let unmet = (load_kw - discharge - staging.served).max(0.0);
    let chillers_on = staging.units + ice_units;
    let tower_kwh = chillers_on.min(plant.towers.count) as f64 * plant.towers.rated_kw;
    let mut pump_kwh = 0.0;
    if load_kw > 0.0 {
        pump_kwh += plant.pumps.chilled_kw;
    }
    if chillers_on > 0 {
        pump_kwh += plant.pumps.cooling_kw;
    }
    if charge > 0.0 || discharge > 0.0 {
        pump_kwh += plant.pumps.glycol_kw;
    }
    let loss = stored * plant.tank.standing_loss_per_hour;
    stored = (stored - loss).clamp(0.0, capacity);

    let result = HourResult {
        hour,
        mode,
        load_kwh: load_kw,
        chiller_kwh: staging.electricity + ice_electricity,
        tower_kwh,
        pump_kwh,
        charge_kwh: charge,
        discharge_kwh: discharge,
        loss_kwh: loss,
        ice_delta_kwh: charge - discharge - loss,
        ice_end_kwh: stored,
        unmet_kwh: unmet,
        chillers_on,
        cost_rmb: 0.0,
    };
    Ok((
        result,
        IceState {
            stored_kwh: stored,
            capacity_kwh: capacity,
        },
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    /// Daytime hours at which a Chiller decision still uses any remaining ice first.
    pub leftover_hours: Vec<u32>,
    /// Hourly cooling-water temperature; the design value when absent.
    pub cooling_water_c: Option<[f64; 24]>,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            leftover_hours: vec![21, 22],
            cooling_water_c: None,
        }
    }
}

impl SimOptions {
    /// Executes the control series literally.
    pub fn without_leftover() -> Self {
        Self {
            leftover_hours: Vec::new(),
            cooling_water_c: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayResult {
    pub month: u32,
    pub hours: Vec<HourResult>,
    pub total_kwh: f64,
    pub cost_rmb: f64,
    pub unmet_kwh: f64,
    pub ice_start: IceState,
    pub ice_end: IceState,
    /// Charge plan for tonight's off-peak hours, evening first.
    pub next_charge: ChargePlan,
}

impl DayResult {
    pub fn hourly_kwh(&self) -> [f64; 24] {
        let mut out = [0.0; 24];
        for r in &self.hours {
            out[r.hour as usize] = r.total_kwh();
        }
        out
    }

    /// `end - (start + charge - discharge - loss)`; zero when the ice balance closes.
    pub fn ice_balance_residual(&self) -> f64 {
        let (c, d, l) = self.hours.iter().fold((0.0, 0.0, 0.0), |(c, d, l), r| {
            (c + r.charge_kwh, d + r.discharge_kwh, l + r.loss_kwh)
        });
        self.ice_end.stored_kwh - (self.ice_start.stored_kwh + c - d - l)
    }

    /// Hours that ran on ice, including leftover-ice hours.
    pub fn ice_hours(&self) -> Vec<u32> {
        self.hours
            .iter()
            .filter(|r| r.mode == HourMode::Dispatch(Decision::Ice))
            .map(|r| r.hour)
            .collect()
    }
}

/// Steps a day hour by hour so callers can re-plan between hours.
///
/// Morning off-peak hours execute the charge plan handed in; at the first
/// evening off-peak hour the simulator plans tonight's charge from the ice
/// actually left and returns it as [`DayResult::next_charge`].
#[derive(Debug, Clone)]
pub struct DaySimulator<'a> {
    plant: &'a PlantConfig,
    month: u32,
    options: SimOptions,
    rates: [f64; 24],
    off_peak: Vec<u32>,
    evening: Vec<u32>,
    morning: Vec<u32>,
    charge: ChargePlan,
    next_charge: Option<ChargePlan>,
    ice_start: IceState,
    ice: IceState,
    hours: Vec<HourResult>,
}

impl<'a> DaySimulator<'a> {
    pub fn new(
        plant: &'a PlantConfig,
        tariff: &TariffSchedule,
        month: u32,
        ice: IceState,
        charge: ChargePlan,
        options: SimOptions,
    ) -> Result<Self, PlantError> {
        IceState::new(ice.stored_kwh, ice.capacity_kwh).map_err(|e| PlantError::Input(e.to_string()))?;
        if let Some(t) = &options.cooling_water_c {
            if let Some(bad) = t
                .iter()
                .find(|t| !(super::T_CW_RANGE.0..=super::T_CW_RANGE.1).contains(*t))
            {
                return Err(PlantError::Input(format!(
                    "cooling water temperature {bad} outside the envelope"
                )));
            }
        }
        let rates = tariff.rates(month)?;
        let off_peak = tariff.off_peak_hours(month)?;
        let last_day_hour = tariff.daytime_hours(month)?.into_iter().max();
        let (evening, morning): (Vec<u32>, Vec<u32>) =
            off_peak.iter().partition(|&&h| last_day_hour.is_some_and(|l| h > l));
        Ok(Self {
            plant,
            month,
            options,
            rates,
            off_peak,
            evening,
            morning,
            charge,
            next_charge: None,
            ice_start: ice,
            ice,
            hours: Vec::with_capacity(24),
        })
    }

    /// Next hour to simulate.
    pub fn hour(&self) -> u32 {
        self.hours.len() as u32
    }

    pub fn is_done(&self) -> bool {
        self.hours.len() == 24
    }

    pub fn ice(&self) -> IceState {
        self.ice
    }

    pub fn results(&self) -> &[HourResult] {
        &self.hours
    }

    /// Whether `hour` is an off-peak charging hour (no decision needed).
    pub fn is_charging_hour(&self, hour: u32) -> bool {
        self.off_peak.contains(&hour)
    }

    fn tonight_plan(&self) -> ChargePlan {
        let hours: Vec<u32> = self.evening.iter().chain(&self.morning).copied().collect();
        plan_night_charge(&self.ice, self.plant.max_charge_rate_kw(), &hours)
    }

    /// Simulates the next hour. `decision` is required for daytime hours and
    /// ignored for off-peak hours.
    pub fn step(&mut self, load_kw: f64, decision: Option<Decision>) -> Result<&HourResult, PlantError> {
        let h = self.hour();
        if h >= 24 {
            return Err(PlantError::Input("day already complete".into()));
        }
        let mode = if self.off_peak.contains(&h) {
            let target = if self.evening.contains(&h) {
                if self.next_charge.is_none() {
                    self.next_charge = Some(self.tonight_plan());
                }
                self.next_charge.as_ref().map_or(0.0, |p| p.get(h))
            } else {
                self.charge.get(h)
            };
            HourMode::Charging { target_kwh: target }
        } else {
            let mut d = decision.ok_or(PlantError::MissingDecision(h))?;
            if d == Decision::Chiller && self.ice.stored_kwh > 0.0 && self.options.leftover_hours.contains(&h) {
                d = Decision::Ice;
            }
            HourMode::Dispatch(d)
        };
        let t_cw = self
            .options
            .cooling_water_c
            .map_or(self.plant.design.cooling_water_c, |t| t[h as usize]);
        let (mut result, ice) = simulate_hour(self.plant, &self.ice, h, load_kw, mode, t_cw)?;
        result.cost_rmb = result.total_kwh() * self.rates[h as usize];
        self.ice = ice;
        self.hours.push(result);
        Ok(self.hours.last().expect("just pushed"))
    }

    pub fn finish(self) -> Result<DayResult, PlantError> {
        if !self.is_done() {
            return Err(PlantError::Input(format!("day stopped at hour {}", self.hour())));
        }
        let next_charge = match self.next_charge {
            Some(p) => p,
            None => plan_night_charge(&self.ice, self.plant.max_charge_rate_kw(), &self.morning),
        };
        let hourly: Vec<f64> = self.hours.iter().map(HourResult::total_kwh).collect();
        Ok(DayResult {
            month: self.month,
            total_kwh: hourly.iter().sum(),
            cost_rmb: self.hours.iter().map(|r| r.cost_rmb).sum(),
            unmet_kwh: self.hours.iter().map(|r| r.unmet_kwh).sum(),
            hours: self.hours,
            ice_start: self.ice_start,
            ice_end: self.ice,
            next_charge,
        })
    }
}

/// Simulates a calendar day under a fixed control series.
#[allow(clippy::too_many_arguments)]
pub fn simulate_day(
    plant: &PlantConfig,
    ice: IceState,
    loads: &[f64; 24],
    ctrl: &ControlSeries,
    charge: &ChargePlan,
    tariff: &TariffSchedule,
    month: u32,
    options: &SimOptions,
) -> Result<DayResult, PlantError> {
    let mut sim = DaySimulator::new(plant, tariff, month, ice, charge.clone(), options.clone())?;
    for h in 0..24u32 {
        sim.step(loads[h as usize], ctrl.get(h))?;
    }
    sim.finish()
}

/// Prices 24 hourly energy values under the month's tariff.
pub fn energy_cost(hourly_kwh: &[f64], tariff: &TariffSchedule, month: u32) -> Result<f64, PlantError> {
    if hourly_kwh.len() != 24 {
        return Err(PlantError::Input(format!(
            "expected 24 hourly values, got {}",
            hourly_kwh.len()
        )));
    }
    for v in hourly_kwh {
        check_input("hourly energy", *v)?;
    }
    let rates = tariff.rates(month)?;
    Ok(hourly_kwh.iter().zip(rates).map(|(e, r)| e * r).sum())
}

pub const HOURLY_CSV_HEADER: [&str; 8] = [
    "date",
    "hour",
    "chiller_kwh",
    "tower_kwh",
    "pump_kwh",
    "ice_delta_kwh",
    "unmet_kwh",
    "cost_rmb",
];

/// Writes per-hour results for a run of days.
pub fn write_hourly_csv<W: Write>(out: W, days: &[(NaiveDate, &DayResult)]) -> Result<(), PlantError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HOURLY_CSV_HEADER)?;
    for (date, day) in days {
        for r in &day.hours {
            w.write_record([
                date.to_string(),
                r.hour.to_string(),
                format!("{:.3}", r.chiller_kwh),
                format!("{:.3}", r.tower_kwh),
                format!("{:.3}", r.pump_kwh),
                format!("{:.3}", r.ice_delta_kwh),
                format!("{:.3}", r.unmet_kwh),
                format!("{:.3}", r.cost_rmb),
            ])?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
