//! Exhaustive search over ice/chiller assignments under a constant-COP cost
//! model, used to measure how far the greedy plan is from optimal.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ScenarioError;
use crate::dispatch::{ControlSeries, Decision, IceState};
use crate::tariff::TariffSchedule;

pub const MAX_ORACLE_HOURS: usize = 20;

/// Chiller electricity = cooling load / `cop`; ice hours cost nothing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantCop {
    pub cop: f64,
}

impl Default for ConstantCop {
    fn default() -> Self {
        Self { cop: 5.5 }
    }
}

impl ConstantCop {
    fn term(&self, load: f64, rate: f64) -> f64 {
        load / self.cop * rate
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    pub control: ControlSeries,
    pub cost: f64,
}

fn check(hours: &[u32], loads: &[f64], rates: &[f64], model: ConstantCop) -> Result<(), ScenarioError> {
    if !(model.cop.is_finite() && model.cop > 0.0) {
        return Err(ScenarioError::Input(format!("COP {} must be > 0", model.cop)));
    }
    for &h in hours {
        let (l, r) = (loads.get(h as usize), rates.get(h as usize));
        match (l, r) {
            (Some(l), Some(r)) if l.is_finite() && *l >= 0.0 && r.is_finite() && *r >= 0.0 => {}
            _ => {
                return Err(ScenarioError::Input(format!(
                    "hour {h}: load and rate must be finite and >= 0"
                )))
            }
        }
    }
    Ok(())
}

/// Sum of terms in ascending order, so equal multisets give equal totals.
fn sorted_sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(f64::total_cmp);
    terms.into_iter().sum()
}

/// Cost of a plan: chiller hours priced at their rate. `loads` and `rates`
/// are indexed by hour of day.
pub fn greedy_cost(plan: &ControlSeries, loads: &[f64], rates: &[f64], model: ConstantCop) -> f64 {
    sorted_sum(
        plan.iter()
            .filter(|(_, d)| *d == Decision::Chiller)
            .map(|(h, _)| model.term(loads[h as usize], rates[h as usize]))
            .collect(),
    )
}

/// Cheapest assignment of `hours` whose ice-hour loads fit in `ice_kwh`.
/// Among equal costs the lexicographically smallest decision vector (over
/// `hours` in increasing order, Ice = 0 < Chiller = 1) wins.
pub fn brute_force(
    hours: &[u32],
    loads: &[f64],
    rates: &[f64],
    ice_kwh: f64,
    model: ConstantCop,
) -> Result<OracleResult, ScenarioError> {
    let mut hours = hours.to_vec();
    hours.sort_unstable();
    hours.dedup();
    let n = hours.len();
    if n > MAX_ORACLE_HOURS {
        return Err(ScenarioError::TooManyHours {
            hours: n,
            limit: MAX_ORACLE_HOURS,
        });
    }
    check(&hours, loads, rates, model)?;
    let load: Vec<f64> = hours.iter().map(|&h| loads[h as usize]).collect();
    let term: Vec<f64> = hours
        .iter()
        .map(|&h| model.term(loads[h as usize], rates[h as usize]))
        .collect();
    // tolerance so that a plan built by subtracting loads one by one is never
    // rejected for rounding
    let budget = ice_kwh.max(0.0) + 1e-9 * ice_kwh.abs().max(1.0);
    // bit (n - 1 - i) of `key` is the decision code of hours[i], so numeric
    // order on keys is lexicographic order on decision vectors
    let eval = |key: u64| -> Option<(f64, u64)> {
        let chiller = |i: usize| (key >> (n - 1 - i)) & 1 == 1;
        let used = sorted_sum((0..n).filter(|&i| !chiller(i)).map(|i| load[i]).collect());
        (used <= budget).then(|| {
            (
                sorted_sum((0..n).filter(|&i| chiller(i)).map(|i| term[i]).collect()),
                key,
            )
        })
    };
    let better = |a: Option<(f64, u64)>, b: Option<(f64, u64)>| match (a, b) {
        (Some(x), Some(y)) => Some(if y.0.total_cmp(&x.0).then(y.1.cmp(&x.1)).is_lt() {
            y
        } else {
            x
        }),
        (x, None) => x,
        (None, y) => y,
    };
    let (cost, key) = (0..1u64 << n)
        .into_par_iter()
        .map(eval)
        .reduce(|| None, better)
        .expect("the all-chiller assignment is always feasible");
    let decisions: BTreeMap<u32, Decision> = hours
        .iter()
        .enumerate()
        .map(|(i, &h)| {
            let d = if (key >> (n - 1 - i)) & 1 == 1 {
                Decision::Chiller
            } else {
                Decision::Ice
            };
            (h, d)
        })
        .collect();
    Ok(OracleResult {
        control: ControlSeries::new(decisions),
        cost,
    })
}

/// Oracle over the month's daytime (non off-peak) hours.
pub fn brute_force_day(
    loads: &[f64; 24],
    ice: &IceState,
    tariff: &TariffSchedule,
    month: u32,
    model: ConstantCop,
) -> Result<OracleResult, ScenarioError> {
    let hours = tariff.daytime_hours(month)?;
    let rates = tariff.rates(month)?;
    brute_force(&hours, loads, &rates, ice.stored_kwh, model)
}
