//! Fits the chiller COP surface (and optionally tower and pump ratings) to
//! measured daily plant electricity with Levenberg-Marquardt.

use chrono::{Datelike, NaiveDate};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cop::basis;
use super::sim::{simulate_day, SimOptions};
use super::{CopCoefficients, PlantConfig, PlantError};
use crate::dispatch::{ChargePlan, ControlSeries, IceState};
use crate::tariff::TariffSchedule;

/// Minimum number of measured days accepted.
pub const MIN_DAYS: usize = 14;

/// Everything needed to replay one measured day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatingDay {
    pub date: NaiveDate,
    pub loads: [f64; 24],
    pub ctrl: ControlSeries,
    pub charge: ChargePlan,
    pub ice_start: IceState,
    #[serde(default)]
    pub options: SimOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationOptions {
    /// Also fit multiplicative scales on tower and pump rated power.
    pub fit_auxiliary: bool,
    pub max_iterations: usize,
    /// Stop when the relative drop in squared error falls below this.
    pub tolerance: f64,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            fit_auxiliary: false,
            max_iterations: 100,
            tolerance: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationResult {
    pub plant: PlantConfig,
    /// Mean absolute percentage error of daily totals, in percent.
    pub mape: f64,
    pub iterations: usize,
    pub parameters: usize,
}

/// Parameters are COP coefficients rescaled by their basis value at a
/// mid-envelope point so that all of them move the COP by similar amounts.
struct Problem<'a> {
    template: &'a PlantConfig,
    measured: &'a [f64],
    log: &'a [OperatingDay],
    tariff: &'a TariffSchedule,
    scale: [f64; 10],
    auxiliary: bool,
}

impl Problem<'_> {
    fn n_params(&self) -> usize {
        if self.auxiliary {
            12
        } else {
            10
        }
    }

    fn initial(&self) -> DVector<f64> {
        let c = self.template.duplex.cop.0;
        let mut p: Vec<f64> = (0..10).map(|j| c[j] * self.scale[j]).collect();
        if self.auxiliary {
            p.extend([1.0, 1.0]);
        }
        DVector::from_vec(p)
    }

    fn plant(&self, p: &DVector<f64>) -> PlantConfig {
        let mut coeffs = [0.0; 10];
        for j in 0..10 {
            coeffs[j] = p[j] / self.scale[j];
        }
        let mut plant = self.template.clone();
        plant.duplex.cop = CopCoefficients(coeffs);
        plant.normal.cop = CopCoefficients(coeffs);
        if self.auxiliary {
            plant.towers.rated_kw *= p[10];
            plant.pumps.chilled_kw *= p[11];
            plant.pumps.cooling_kw *= p[11];
            plant.pumps.glycol_kw *= p[11];
        }
        plant
    }

    fn simulate(&self, plant: &PlantConfig) -> Result<Vec<f64>, PlantError> {
        self.log
            .iter()
            .map(|d| {
                simulate_day(
                    plant,
                    d.ice_start,
                    &d.loads,
                    &d.ctrl,
                    &d.charge,
                    self.tariff,
                    d.date.month(),
                    &d.options,
                )
                .map(|r| r.total_kwh)
            })
            .collect()
    }

    /// Relative daily residuals; `None` where the surface leaves the
    /// physical region (non-positive COP).
    fn residuals(&self, p: &DVector<f64>) -> Option<DVector<f64>> {
        if self.auxiliary && (p[10] <= 0.0 || p[11] <= 0.0) {
            return None;
        }
        let sim = self.simulate(&self.plant(p)).ok()?;
        Some(DVector::from_iterator(
            sim.len(),
            sim.iter().zip(self.measured).map(|(s, m)| (s - m) / m),
        ))
    }

    fn jacobian(&self, p: &DVector<f64>) -> Option<DMatrix<f64>> {
        let n = self.n_params();
        let cols: Vec<Option<DVector<f64>>> = (0..n)
            .into_par_iter()
            .map(|j| {
                let h = 1e-6 * p[j].abs().max(1.0);
                let mut up = p.clone();
                up[j] += h;
                let mut down = p.clone();
                down[j] -= h;
                Some((self.residuals(&up)? - self.residuals(&down)?) / (2.0 * h))
            })
            .collect();
        let cols: Option<Vec<DVector<f64>>> = cols.into_iter().collect();
        Some(DMatrix::from_columns(&cols?))
    }
}

fn mape(sim: &[f64], measured: &[f64]) -> f64 {
    let sum: f64 = sim.iter().zip(measured).map(|(s, m)| ((s - m) / m).abs()).sum();
    100.0 * sum / measured.len() as f64
}

/// Fits the template's COP surface (shared by duplex and normal chillers) so
/// that simulated daily totals match `measured_daily_kwh`, one value per
/// entry of `log`.
pub fn calibrate(
    template: &PlantConfig,
    measured_daily_kwh: &[f64],
    log: &[OperatingDay],
    tariff: &TariffSchedule,
    options: &CalibrationOptions,
) -> Result<CalibrationResult, PlantError> {
    template.validate()?;
    if measured_daily_kwh.len() != log.len() {
        return Err(PlantError::Input(format!(
            "{} measured day(s) but {} operating log entries",
            measured_daily_kwh.len(),
            log.len()
        )));
    }
    if let Some(m) = measured_daily_kwh.iter().find(|m| !(m.is_finite() && **m > 0.0)) {
        return Err(PlantError::Input(format!("measured daily total {m} must be > 0")));
    }
    let (x, y, z) = (template.design.cooling_water_c, template.design.chilled_supply_c, 0.75);
    let mut scale = basis(x, y, z);
    scale.iter_mut().for_each(|s| *s = s.abs().max(1e-6));
    let problem = Problem {
        template,
        measured: measured_daily_kwh,
        log,
        tariff,
        scale,
        auxiliary: options.fit_auxiliary,
    };
    let n = problem.n_params();
    if log.len() < n {
        return Err(PlantError::Underdetermined {
            observations: log.len(),
            parameters: n,
        });
    }
    if log.len() < MIN_DAYS {
        return Err(PlantError::Input(format!(
            "calibration needs at least {MIN_DAYS} days, got {}",
            log.len()
        )));
    }

    let mut p = problem.initial();
    let mut r = problem
        .residuals(&p)
        .ok_or_else(|| PlantError::Calibration("template surface is not positive on the log".into()))?;
    let mut cost = r.norm_squared();
    let mut lambda = 1e-3;
    let mut iterations = 0;
    while iterations < options.max_iterations && cost > 0.0 {
        iterations += 1;
        let Some(jac) = problem.jacobian(&p) else {
            break;
        };
        let a = jac.transpose() * &jac;
        let g = jac.transpose() * &r;
        let mut improved = false;
        while lambda < 1e12 {
            let mut m = a.clone();
            for i in 0..n {
                m[(i, i)] += lambda * a[(i, i)].max(1e-9);
            }
            let Some(step) = m.cholesky().map(|c| c.solve(&(-&g))) else {
                lambda *= 4.0;
                continue;
            };
            let trial = &p + &step;
            match problem.residuals(&trial) {
                Some(tr) if tr.norm_squared() < cost => {
                    let new_cost = tr.norm_squared();
                    let rel = (cost - new_cost) / cost;
                    p = trial;
                    r = tr;
                    cost = new_cost;
                    lambda = (lambda / 3.0).max(1e-12);
                    improved = rel > options.tolerance;
                    break;
                }
                _ => lambda *= 4.0,
            }
        }
        if !improved {
            break;
        }
    }

    let plant = problem.plant(&p);
    plant
        .validate()
        .map_err(|e| PlantError::Calibration(format!("fitted plant is not physical: {e}")))?;
    let sim = problem.simulate(&plant)?;
    Ok(CalibrationResult {
        mape: mape(&sim, measured_daily_kwh),
        plant,
        iterations,
        parameters: n,
    })
}
