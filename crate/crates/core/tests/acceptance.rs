//! Acceptance checks, one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary so the verdict lines are always printed. Pass
//! criterion numbers to run a subset: `cargo test --test acceptance -- 4 5`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use chrono::{Datelike, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use tesopt::dispatch::{
    fixed_schedule, plan_day, plan_day_with, plan_night_charge, AllocationRule, Decision, IceState,
};
use tesopt::forecast::{
    compute_metrics, feature_search, CvOptions, Feature, FeatureMask, Forecaster, MiddayVariant, ModelParams, RfParams,
    SampleSet,
};
use tesopt::ingest::DIURNAL_PROFILE;
use tesopt::plant::{calibrate, simulate_day, CalibrationOptions, CopCoefficients, OperatingDay, SimOptions};
use tesopt::scenario::{
    brute_force_day, compare, emit_report, greedy_cost, run_scenario, run_season, ConstantCop, PerfectPredictor,
    ReportFormat, ScenarioKind, SeasonConfig,
};
use tesopt::tariff::{derive_hour_sequence, TariffSchedule, Tier};
use tesopt::PlantConfig;

type Verdict = Result<String, String>;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn season() -> SeasonConfig {
    SeasonConfig::from_path(configs().join("season.json")).expect("shipped season config")
}

fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

fn ensure(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// 1 ------------------------------------------------------------------------

fn tariff_exactness() -> Verdict {
    let shipped = TariffSchedule::from_path(configs().join("tariff_beijing_2021.json")).map_err(|e| e.to_string())?;
    let expected: [(&[u32], Tier, f64); 4] = [
        (&[11, 12, 16], Tier::SuperPeak, 1.2145),
        (&[10, 13, 14, 18, 19, 20], Tier::Peak, 1.0862),
        (&[7, 8, 9, 15, 17, 21, 22], Tier::PartialPeak, 0.5675),
        (&[23, 0, 1, 2, 3, 4, 5, 6], Tier::OffPeak, 0.1001),
    ];
    let mut checked = 0;
    for t in [TariffSchedule::beijing_2021(), shipped] {
        for month in [7, 8] {
            for (hours, tier, rate) in &expected {
                for &h in *hours {
                    let r = t.rate_at(month, h).map_err(|e| e.to_string())?;
                    let k = t.tier_at(month, h).map_err(|e| e.to_string())?;
                    if r.to_bits() != rate.to_bits() || k != *tier {
                        return Err(format!("month {month} hour {h}: {k:?} {r} != {tier:?} {rate}"));
                    }
                    checked += 1;
                }
            }
        }
    }
    Ok(format!("{checked} (month, hour) lookups bit-exact"))
}

// 2 ------------------------------------------------------------------------

fn hour_sequence_exactness() -> Verdict {
    const QUOTED: [u32; 16] = [11, 12, 16, 10, 13, 14, 18, 19, 20, 17, 15, 9, 8, 7, 22, 21];
    let t = TariffSchedule::beijing_2021();
    for month in [7, 8] {
        let seq = derive_hour_sequence(&t, month).map_err(|e| e.to_string())?;
        if seq.hours() != QUOTED {
            return Err(format!("month {month}: {:?}", seq.hours()));
        }
    }
    Ok(format!("{QUOTED:?}"))
}

// 3 ------------------------------------------------------------------------

fn metrics_correctness() -> Verdict {
    let m = compute_metrics(&[1.0, 2.0, 3.0], &[2.0, 2.0, 2.0]).map_err(|e| e.to_string())?;
    let (mae, rmse) = (2.0 / 3.0, (2.0f64 / 3.0).sqrt());
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9;
    let cv_ok = m.cvmae.is_some_and(|v| close(v, mae / 2.0)) && m.cvrmse.is_some_and(|v| close(v, rmse / 2.0));
    if !(close(m.mae, mae) && close(m.rmse, rmse) && cv_ok) {
        return Err(format!("fixture gave {m:?}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for i in 0..1000 {
        let n = rng.random_range(1..200);
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..10_000.0)).collect();
        let p: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..10_000.0)).collect();
        let m = compute_metrics(&a, &p).map_err(|e| e.to_string())?;
        if m.mae > m.rmse {
            return Err(format!("vector {i}: MAE {} > RMSE {}", m.mae, m.rmse));
        }
    }
    Ok(format!(
        "MAE {:.4} RMSE {:.4}; MAE <= RMSE on 1000 vectors",
        m.mae, m.rmse
    ))
}

// 4 ------------------------------------------------------------------------

/// Daytime loads on the synthetic two-peak profile with day-level scale and
/// hourly noise.
fn random_day(rng: &mut ChaCha8Rng, hours: &[u32]) -> [f64; 24] {
    let scale = 3100.0 * rng.random_range(0.7..1.3);
    let mut day = [0.0; 24];
    for &h in hours {
        day[h as usize] = scale * DIURNAL_PROFILE[h as usize] * rng.random_range(0.9..1.1);
    }
    day
}

fn dispatch_vs_oracle() -> Verdict {
    const GAP_LIMIT: f64 = 0.05;
    let t = TariffSchedule::beijing_2021();
    let model = ConstantCop::default();
    let mut rng = ChaCha8Rng::seed_from_u64(20210704);
    let mut gaps = Vec::new();
    let mut skip_gaps = Vec::new();
    for i in 0..200 {
        let month = if i % 2 == 0 { 7 } else { 9 };
        let hours = t.daytime_hours(month).map_err(|e| e.to_string())?;
        let seq = t.hour_sequence(month).map_err(|e| e.to_string())?;
        let rates = t.rates(month).map_err(|e| e.to_string())?;
        let day = random_day(&mut rng, &hours);
        let total: f64 = hours.iter().map(|h| day[*h as usize]).sum();
        let ice = IceState::new(rng.random_range(0.0..1.0) * total, 76_000.0f64.max(total)).unwrap();
        let oracle = brute_force_day(&day, &ice, &t, month, model).map_err(|e| e.to_string())?;
        let gap = |rule| -> Result<f64, String> {
            let plan = plan_day_with(rule, &ice, &day, &seq).map_err(|e| e.to_string())?;
            let g = greedy_cost(&plan, &day, &rates, model);
            if g < oracle.cost {
                return Err(format!("instance {i}: greedy {g} below oracle {}", oracle.cost));
            }
            Ok(if oracle.cost > 0.0 {
                (g - oracle.cost) / oracle.cost
            } else {
                0.0
            })
        };
        gaps.push(gap(AllocationRule::default())?);
        skip_gaps.push(gap(AllocationRule::SkipAndContinue)?);
    }
    // equal loads: the rate order of the sequence is optimal
    for i in 0..50 {
        let month = if i % 2 == 0 { 8 } else { 6 };
        let hours = t.daytime_hours(month).map_err(|e| e.to_string())?;
        let level = rng.random_range(500.0..5000.0);
        let mut day = [0.0; 24];
        hours.iter().for_each(|h| day[*h as usize] = level);
        let ice = IceState::new(rng.random_range(0.0..=1.0) * level * hours.len() as f64, 100_000.0).unwrap();
        let plan = plan_day(&ice, &day, &t.hour_sequence(month).unwrap()).map_err(|e| e.to_string())?;
        let g = greedy_cost(&plan, &day, &t.rates(month).unwrap(), model);
        let o = brute_force_day(&day, &ice, &t, month, model).map_err(|e| e.to_string())?;
        if g != o.cost {
            return Err(format!("equal-load instance {i}: greedy {g} != oracle {}", o.cost));
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let max = gaps.iter().copied().fold(0.0, f64::max);
    let detail = format!(
        "greedy >= oracle on 250, equal on 50 equal-load; mean gap {:.2}% (limit {:.0}%), max {:.1}%; skip-and-continue rule mean gap {:.2}%",
        100.0 * mean(&gaps),
        100.0 * GAP_LIMIT,
        100.0 * max,
        100.0 * mean(&skip_gaps)
    );
    ensure(mean(&gaps) <= GAP_LIMIT, detail)
}

// 5 ------------------------------------------------------------------------

fn feasibility_and_monotonicity() -> Verdict {
    let t = TariffSchedule::beijing_2021();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for i in 0..1000 {
        let month = rng.random_range(5..=10);
        let seq = t.hour_sequence(month).map_err(|e| e.to_string())?;
        let mut day = [0.0; 24];
        for &h in seq.hours() {
            day[h as usize] = if rng.random_bool(0.1) {
                0.0
            } else {
                rng.random_range(0.0..8000.0)
            };
        }
        let total: f64 = seq.hours().iter().map(|h| day[*h as usize]).sum();
        let mut levels: Vec<f64> = (0..6).map(|_| rng.random_range(0.0..1.2) * total).collect();
        levels.sort_by(f64::total_cmp);
        let mut prev: Option<Vec<u32>> = None;
        for s in levels {
            let ice = IceState::new(s, 100_000.0f64.max(s)).unwrap();
            let plan = plan_day(&ice, &day, &seq).map_err(|e| e.to_string())?;
            let used: f64 = plan.ice_hours().iter().map(|h| day[*h as usize]).sum();
            if used > s {
                return Err(format!("instance {i}: ice hours use {used} > {s}"));
            }
            if let Some(p) = &prev {
                if let Some(h) = p.iter().find(|h| plan.get(**h) != Some(Decision::Ice)) {
                    return Err(format!(
                        "instance {i}: hour {h} flipped to Chiller when ice rose to {s}"
                    ));
                }
            }
            prev = Some(plan.ice_hours());
        }
    }
    Ok("1000 instances x 6 ice levels".into())
}

// 6 ------------------------------------------------------------------------

fn ice_balance() -> Verdict {
    let mut cfg = season();
    cfg.eval_end = Some(cfg.eval_start + chrono::Duration::days(29));
    let data = cfg.synthetic_data().map_err(|e| e.to_string())?;
    let plant = cfg.plant().map_err(|e| e.to_string())?;
    let tariff = cfg.tariff().map_err(|e| e.to_string())?;
    let cap = plant.tank.capacity_kwh;
    let mut worst: f64 = 0.0;
    let mut days = 0;
    for kind in [ScenarioKind::Fixed, ScenarioKind::DayAhead, ScenarioKind::MidDay6] {
        let r = run_scenario(kind, &data, &mut PerfectPredictor, &plant, &tariff, &cfg.options)
            .map_err(|e| e.to_string())?;
        if r.days.len() != 30 || !r.failures.is_empty() {
            return Err(format!("{kind}: {} days, {} failures", r.days.len(), r.failures.len()));
        }
        for (i, d) in r.days.iter().enumerate() {
            worst = worst.max(d.result.ice_balance_residual().abs());
            let levels =
                std::iter::once(d.result.ice_start.stored_kwh).chain(d.result.hours.iter().map(|h| h.ice_end_kwh));
            if let Some(v) = levels.into_iter().find(|v| !(0.0..=cap).contains(v)) {
                return Err(format!("{kind} {}: ice level {v} outside [0, {cap}]", d.date));
            }
            if i > 0 && r.days[i - 1].result.ice_end != d.result.ice_start {
                return Err(format!("{kind} {}: ice does not carry over", d.date));
            }
        }
        days += r.days.len();
    }
    ensure(
        worst <= 1e-6,
        format!("{days} simulated days, worst daily closure {worst:.2e} kWh"),
    )
}

// 7 ------------------------------------------------------------------------

fn operating_log() -> Result<Vec<OperatingDay>, String> {
    let mut cfg = season();
    cfg.eval_start = date(2021, 7, 1);
    cfg.eval_end = Some(date(2021, 8, 9));
    let data = cfg.synthetic_data().map_err(|e| e.to_string())?;
    let plant = cfg.plant().map_err(|e| e.to_string())?;
    let tariff = cfg.tariff().map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    data.dates()
        .into_iter()
        .map(|d| {
            let loads = data.actual_day(d).ok_or("missing day")?;
            let mut t_cw = [0.0; 24];
            for (h, v) in t_cw.iter_mut().enumerate() {
                let ts = d.and_hms_opt(h as u32, 0, 0).unwrap();
                let temp = data.weather.at(ts).ok_or("missing weather")?.temperature;
                *v = (temp + 5.0).clamp(22.0, 35.0);
            }
            let ice = IceState::new(rng.random_range(10_000.0..40_000.0), plant.tank.capacity_kwh).unwrap();
            let morning: Vec<u32> = tariff
                .off_peak_hours(d.month())
                .unwrap()
                .into_iter()
                .filter(|h| *h < 12)
                .collect();
            Ok(OperatingDay {
                date: d,
                loads,
                ctrl: fixed_schedule(d.month()).map_err(|e| e.to_string())?,
                charge: plan_night_charge(&ice, plant.max_charge_rate_kw(), &morning),
                ice_start: ice,
                options: SimOptions {
                    cooling_water_c: Some(t_cw),
                    ..SimOptions::default()
                },
            })
        })
        .collect()
}

fn calibration() -> Verdict {
    let template = PlantConfig::default();
    let tariff = TariffSchedule::beijing_2021();
    let log = operating_log()?;
    let mut truth = template.clone();
    let mut c = truth.duplex.cop.0;
    c[0] -= 0.6;
    c[3] += 0.8;
    c[1] -= 0.01;
    truth.duplex.cop = CopCoefficients(c);
    truth.normal.cop = CopCoefficients(c);
    let measured: Vec<f64> = log
        .iter()
        .map(|d| {
            simulate_day(
                &truth,
                d.ice_start,
                &d.loads,
                &d.ctrl,
                &d.charge,
                &tariff,
                d.date.month(),
                &d.options,
            )
            .map(|r| r.total_kwh)
        })
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let opts = CalibrationOptions::default();
    let clean = calibrate(&template, &measured, &log, &tariff, &opts).map_err(|e| e.to_string())?;
    let noise = Normal::new(0.0, 0.05).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(577);
    let noisy: Vec<f64> = measured.iter().map(|m| m * (1.0 + noise.sample(&mut rng))).collect();
    let rough = calibrate(&template, &noisy, &log, &tariff, &opts).map_err(|e| e.to_string())?;
    ensure(
        clean.mape < 1.0 && rough.mape <= 6.0,
        format!(
            "{} days; noiseless MAPE {:.3}% (< 1%), 5% noise MAPE {:.2}% (<= 6%)",
            log.len(),
            clean.mape,
            rough.mape
        ),
    )
}

// 8 ------------------------------------------------------------------------

fn scenario_ordering() -> Verdict {
    let cfg = season();
    let data = cfg.synthetic_data().map_err(|e| e.to_string())?;
    let results = run_season(
        &ScenarioKind::ALL,
        &data,
        &cfg.pipeline().map_err(|e| e.to_string())?,
        &cfg.plant().map_err(|e| e.to_string())?,
        &cfg.tariff().map_err(|e| e.to_string())?,
        &cfg.options,
    )
    .map_err(|e| e.to_string())?;
    let mean: BTreeMap<ScenarioKind, f64> = results.iter().map(|r| (r.kind, r.mean_daily_cost())).collect();
    let failures: usize = results.iter().map(|r| r.failures.len()).sum();
    let days = results[0].days.len();
    let (f, da, m6, m24) = (
        mean[&ScenarioKind::Fixed],
        mean[&ScenarioKind::DayAhead],
        mean[&ScenarioKind::MidDay6],
        mean[&ScenarioKind::MidDay24],
    );
    let spread = (m6 - m24).abs() / m6;
    let table = compare(&results).map_err(|e| e.to_string())?;
    let pct = |k| table.row(k).and_then(|r| r.reduction_pct).unwrap_or(f64::NAN);
    ensure(
        days == 100 && failures == 0 && f >= da && da >= m6 && spread <= 0.01,
        format!(
            "{days} days; mean daily RMB fixed {f:.1} >= day-ahead {da:.1} >= mid-day6 {m6:.1}; mid-day24 {m24:.1} ({:.2}% from mid-day6); reductions {:.1}% / {:.1}% / {:.1}%",
            100.0 * spread,
            pct(ScenarioKind::DayAhead),
            pct(ScenarioKind::MidDay6),
            pct(ScenarioKind::MidDay24),
        ),
    )
}

// 9 ------------------------------------------------------------------------

fn midday_improvement() -> Verdict {
    let cfg = SeasonConfig::from_path(configs().join("regime_shift.json")).map_err(|e| e.to_string())?;
    let data = cfg.synthetic_data().map_err(|e| e.to_string())?;
    let day = data.start;
    let pipeline = tesopt::PipelineConfig {
        midday: MiddayVariant::Midday6,
        ..cfg.pipeline().map_err(|e| e.to_string())?
    };
    let mut f = Forecaster::new(pipeline).map_err(|e| e.to_string())?;
    let fc = f
        .forecast_day(&data.history(), &data.forecast_weather, day)
        .map_err(|e| e.to_string())?;
    let actual = data.actual_day(day).ok_or("missing target day")?;
    let mae = |p: &[f64; 24]| (9..24).map(|h| (p[h] - actual[h]).abs()).sum::<f64>() / 15.0;
    let (da, m6) = (mae(&fc.day_ahead), mae(&fc.effective()));
    ensure(
        m6 < da,
        format!("{day}: MAE over hours 9-23 mid-day6 {m6:.0} kW < day-ahead {da:.0} kW"),
    )
}

// 10 -----------------------------------------------------------------------

fn files_under(root: &Path) -> std::io::Result<BTreeMap<PathBuf, Vec<u8>>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir)? {
            let p = entry?.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p)?);
            }
        }
    }
    Ok(out)
}

fn determinism() -> Verdict {
    let mut cfg = season();
    cfg.eval_end = Some(cfg.eval_start + chrono::Duration::days(9));
    let run = |out: &Path| -> Result<(), String> {
        let data = cfg.synthetic_data().map_err(|e| e.to_string())?;
        let results = run_season(
            &ScenarioKind::ALL,
            &data,
            &cfg.pipeline().map_err(|e| e.to_string())?,
            &cfg.plant().map_err(|e| e.to_string())?,
            &cfg.tariff().map_err(|e| e.to_string())?,
            &cfg.options,
        )
        .map_err(|e| e.to_string())?;
        let table = compare(&results).map_err(|e| e.to_string())?;
        emit_report(&results, &table, ReportFormat::Full, out).map_err(|e| e.to_string())?;
        Ok(())
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run(a.path())?;
    run(b.path())?;
    let (fa, fb) = (
        files_under(a.path()).map_err(|e| e.to_string())?,
        files_under(b.path()).map_err(|e| e.to_string())?,
    );
    if fa.keys().ne(fb.keys()) {
        return Err("report directories list different files".into());
    }
    if let Some((p, _)) = fa.iter().find(|(p, bytes)| fb[*p] != **bytes) {
        return Err(format!("{} differs between runs", p.display()));
    }
    let bytes: usize = fa.values().map(Vec::len).sum();
    Ok(format!("{} files, {bytes} bytes identical across two runs", fa.len()))
}

// 11 -----------------------------------------------------------------------

fn feature_search_protocol() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let t0 = date(2021, 7, 1).and_hms_opt(0, 0, 0).unwrap();
    let mut set = SampleSet::default();
    for i in 0..240 {
        let row = [
            rng.random_range(15.0..38.0),
            rng.random_range(20.0..95.0),
            rng.random_range(0.0..900.0),
            rng.random_range(0.0..8.0),
            rng.random_range(1..=8) as f64,
            (i % 24) as f64,
            rng.random_range(800.0..6000.0),
        ];
        let t = row[Feature::T.index()];
        set.timestamps.push(t0 + chrono::Duration::hours(i));
        set.features.push(row);
        set.targets.push(1500.0 + 120.0 * (t - 15.0) + 3.0 * (t - 25.0).powi(2));
    }
    let params = ModelParams::Rf(RfParams {
        n_estimators: 20,
        max_depth: 8,
        ..RfParams::default()
    });
    let cv = CvOptions::default();
    let first = feature_search(&params, &set, &cv).map_err(|e| e.to_string())?;
    let second = feature_search(&params, &set, &cv).map_err(|e| e.to_string())?;
    let distinct: std::collections::BTreeSet<u8> = first.iter().map(|r| r.mask.bits()).collect();
    let order = |v: &[tesopt::forecast::MaskScore]| v.iter().map(|r| r.mask).collect::<Vec<FeatureMask>>();
    let winner = first[0].mask;
    ensure(
        first.len() == 127 && distinct.len() == 127 && order(&first) == order(&second) && winner.contains(Feature::T),
        format!(
            "{} masks ({} distinct), ranking repeatable: {}, winner {winner} (MAE {:.1})",
            first.len(),
            distinct.len(),
            order(&first) == order(&second),
            first[0].metrics.mae
        ),
    )
}

// --------------------------------------------------------------------------

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Option<Duration>,
    check: fn() -> Verdict,
}

fn main() {
    let secs = |s| Some(Duration::from_secs(s));
    let all = [
        Criterion {
            id: 1,
            name: "tariff exactness",
            limit: secs(1),
            check: tariff_exactness,
        },
        Criterion {
            id: 2,
            name: "hour-sequence exactness",
            limit: secs(1),
            check: hour_sequence_exactness,
        },
        Criterion {
            id: 3,
            name: "metrics correctness",
            limit: None,
            check: metrics_correctness,
        },
        Criterion {
            id: 4,
            name: "dispatch vs oracle",
            limit: secs(120),
            check: dispatch_vs_oracle,
        },
        Criterion {
            id: 5,
            name: "plan feasibility and monotonicity",
            limit: secs(60),
            check: feasibility_and_monotonicity,
        },
        Criterion {
            id: 6,
            name: "ice balance",
            limit: None,
            check: ice_balance,
        },
        Criterion {
            id: 7,
            name: "calibration",
            limit: secs(300),
            check: calibration,
        },
        Criterion {
            id: 8,
            name: "scenario ordering",
            limit: secs(1800),
            check: scenario_ordering,
        },
        Criterion {
            id: 9,
            name: "mid-day improvement",
            limit: secs(300),
            check: midday_improvement,
        },
        Criterion {
            id: 10,
            name: "determinism",
            limit: None,
            check: determinism,
        },
        Criterion {
            id: 11,
            name: "feature-search protocol",
            limit: None,
            check: feature_search_protocol,
        },
    ];
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    for c in all.iter().filter(|c| wanted.is_empty() || wanted.contains(&c.id)) {
        let start = Instant::now();
        let verdict = (c.check)();
        let took = start.elapsed();
        let verdict = match (verdict, c.limit) {
            (Ok(d), Some(limit)) if took > limit => Err(format!("{d}; took longer than {limit:?}")),
            (v, _) => v,
        };
        let (tag, detail) = match &verdict {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!("{tag} {:>2} {}: {detail} [{:.2} s]", c.id, c.name, took.as_secs_f64());
        if verdict.is_err() {
            failed.push(c.id);
        }
    }
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
