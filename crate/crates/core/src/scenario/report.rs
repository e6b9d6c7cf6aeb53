//! Report directory: comparison table, per-day costs and SVG plots.
//!
//! Output depends only on the inputs, so reruns produce identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ComparisonTable, DayRecord, ScenarioError, ScenarioResult};
use crate::dispatch::Decision;
use crate::forecast::compute_metrics;
use crate::plant::HourMode;

pub const COMPARISON_CSV_HEADER: [&str; 11] = [
    "scenario",
    "days",
    "failed_days",
    "total_kwh",
    "cost_rmb",
    "reduction_rmb",
    "reduction_pct",
    "mae_kw",
    "rmse_kw",
    "cvmae",
    "cvrmse",
];

pub const DAY_CSV_HEADER: [&str; 10] = [
    "date",
    "status",
    "total_kwh",
    "cost_rmb",
    "unmet_kwh",
    "ice_start_kwh",
    "ice_end_kwh",
    "ice_hours",
    "mae_kw",
    "note",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    /// Tables and plots.
    #[default]
    Full,
    /// Tables only.
    Tables,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ScenarioError + '_ {
    move |source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), ScenarioError> {
    fs::write(path, bytes).map_err(io_err(path))
}

fn opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(String::new, |x| format!("{x:.digits$}"))
}

fn comparison_csv(table: &ComparisonTable) -> Result<Vec<u8>, ScenarioError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(COMPARISON_CSV_HEADER)?;
    for r in &table.rows {
        let m = r.metrics.as_ref();
        w.write_record([
            r.scenario.id().to_string(),
            r.days.to_string(),
            r.failed_days.to_string(),
            format!("{:.3}", r.total_kwh),
            format!("{:.3}", r.cost_rmb),
            opt(r.reduction_rmb, 3),
            opt(r.reduction_pct, 3),
            opt(m.map(|m| m.mae), 3),
            opt(m.map(|m| m.rmse), 3),
            opt(m.and_then(|m| m.cvmae), 5),
            opt(m.and_then(|m| m.cvrmse), 5),
        ])?;
    }
    w.into_inner().map_err(|e| ScenarioError::Input(e.to_string()))
}

fn day_mae(d: &DayRecord) -> Option<f64> {
    let p = d.predicted?;
    compute_metrics(&d.actual, &p).ok().map(|m| m.mae)
}

fn days_csv(result: &ScenarioResult) -> Result<Vec<u8>, ScenarioError> {
    enum Row<'a> {
        Ok(&'a DayRecord),
        Failed(&'a super::DayFailure),
    }
    let mut rows: Vec<(chrono::NaiveDate, Row)> = result
        .days
        .iter()
        .map(|d| (d.date, Row::Ok(d)))
        .chain(result.failures.iter().map(|f| (f.date, Row::Failed(f))))
        .collect();
    rows.sort_by_key(|(d, _)| *d);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(DAY_CSV_HEADER)?;
    for (date, row) in rows {
        match row {
            Row::Ok(d) => {
                let ice_hours: Vec<String> = d.result.ice_hours().iter().map(u32::to_string).collect();
                w.write_record([
                    date.to_string(),
                    "ok".into(),
                    format!("{:.3}", d.result.total_kwh),
                    format!("{:.3}", d.result.cost_rmb),
                    format!("{:.3}", d.result.unmet_kwh),
                    format!("{:.3}", d.result.ice_start.stored_kwh),
                    format!("{:.3}", d.result.ice_end.stored_kwh),
                    ice_hours.join(" "),
                    opt(day_mae(d), 3),
                    String::new(),
                ])?;
            }
            Row::Failed(f) => {
                let mut rec = vec![date.to_string(), "failed".to_string()];
                rec.extend(std::iter::repeat_n(String::new(), 7));
                rec.push(f.message.clone());
                w.write_record(rec)?;
            }
        }
    }
    w.into_inner().map_err(|e| ScenarioError::Input(e.to_string()))
}

const W: f64 = 760.0;
const H: f64 = 380.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 70.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

fn nice_max(v: f64) -> f64 {
    if v <= 0.0 {
        return 1.0;
    }
    let mag = 10f64.powf(v.log10().floor());
    [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|m| *m >= v)
        .unwrap_or(10.0 * mag)
}

fn svg_open(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r##"<rect width="{W}" height="{H}" fill="#ffffff"/>"##);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="14">{title}</text>"#,
        W / 2.0
    );
    s
}

/// Hourly load bars coloured by operating mode, the forecast in effect, and
/// the ice level on the right axis.
fn day_svg(scenario: &str, d: &DayRecord) -> String {
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let peak = d
        .actual
        .iter()
        .chain(d.predicted.iter().flatten())
        .fold(0.0f64, |a, b| a.max(*b));
    let ymax = nice_max(peak);
    let cap = d.result.ice_start.capacity_kwh;
    let y = |v: f64| TOP + ph * (1.0 - v / ymax);
    let yi = |v: f64| TOP + ph * (1.0 - v / cap);
    let slot = pw / 24.0;
    let mut s = svg_open(&format!("{} {scenario}", d.date));
    let _ = writeln!(
        s,
        r##"<rect x="{LEFT}" y="{TOP}" width="{pw:.1}" height="{ph:.1}" fill="none" stroke="#888888"/>"##
    );
    for k in 0..=4 {
        let v = ymax * k as f64 / 4.0;
        let _ = writeln!(
            s,
            r##"<text x="{:.1}" y="{:.1}" text-anchor="end">{v:.0}</text>"##,
            LEFT - 6.0,
            y(v) + 4.0
        );
        let iv = cap * k as f64 / 4.0;
        let _ = writeln!(
            s,
            r##"<text x="{:.1}" y="{:.1}" fill="#2ca02c">{iv:.0}</text>"##,
            W - RIGHT + 6.0,
            yi(iv) + 4.0
        );
    }
    for r in &d.result.hours {
        let colour = match r.mode {
            HourMode::Charging { .. } => "#b0b0b0",
            HourMode::Dispatch(Decision::Ice) => "#4c78a8",
            HourMode::Dispatch(Decision::Chiller) => "#f58518",
        };
        let x = LEFT + slot * r.hour as f64 + 1.0;
        let top = y(r.load_kwh);
        let _ = writeln!(
            s,
            r#"<rect x="{x:.1}" y="{top:.1}" width="{:.1}" height="{:.1}" fill="{colour}"/>"#,
            slot - 2.0,
            TOP + ph - top
        );
        if r.hour % 3 == 0 {
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
                x + slot / 2.0 - 1.0,
                TOP + ph + 16.0,
                r.hour
            );
        }
    }
    if let Some(p) = d.predicted {
        let pts: Vec<String> = p
            .iter()
            .enumerate()
            .map(|(h, v)| format!("{:.1},{:.1}", LEFT + slot * (h as f64 + 0.5), y(*v)))
            .collect();
        let _ = writeln!(
            s,
            r##"<polyline points="{}" fill="none" stroke="#000000" stroke-dasharray="4 3"/>"##,
            pts.join(" ")
        );
    }
    let mut ice_pts = vec![format!("{LEFT:.1},{:.1}", yi(d.result.ice_start.stored_kwh))];
    ice_pts.extend(
        d.result
            .hours
            .iter()
            .map(|r| format!("{:.1},{:.1}", LEFT + slot * (r.hour as f64 + 1.0), yi(r.ice_end_kwh))),
    );
    let _ = writeln!(
        s,
        r##"<polyline points="{}" fill="none" stroke="#2ca02c" stroke-width="2"/>"##,
        ice_pts.join(" ")
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">hour (blue: ice, orange: chillers, grey: charging; dashed: forecast; green: stored ice kWh)</text>"#,
        W / 2.0,
        H - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.1}" transform="rotate(-90 16 {:.1})" text-anchor="middle">load kW</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );
    s.push_str("</svg>\n");
    s
}

fn season_svg(table: &ComparisonTable) -> String {
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let ymax = nice_max(table.rows.iter().fold(0.0f64, |a, r| a.max(r.cost_rmb)));
    let y = |v: f64| TOP + ph * (1.0 - v / ymax);
    let n = table.rows.len().max(1) as f64;
    let slot = pw / n;
    let mut s = svg_open("Season cost by scenario (RMB)");
    let _ = writeln!(
        s,
        r##"<line x1="{LEFT}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="#888888"/>"##,
        TOP + ph,
        LEFT + pw,
        TOP + ph
    );
    for (i, r) in table.rows.iter().enumerate() {
        let x = LEFT + slot * i as f64 + slot * 0.2;
        let top = y(r.cost_rmb);
        let _ = writeln!(
            s,
            r##"<rect x="{x:.1}" y="{top:.1}" width="{:.1}" height="{:.1}" fill="#4c78a8"/>"##,
            slot * 0.6,
            TOP + ph - top
        );
        let label = match r.reduction_pct {
            Some(p) => format!("{:.0} ({p:+.2}%)", r.cost_rmb),
            None => format!("{:.0}", r.cost_rmb),
        };
        let cx = x + slot * 0.3;
        let _ = writeln!(
            s,
            r#"<text x="{cx:.1}" y="{:.1}" text-anchor="middle">{label}</text>"#,
            top - 6.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{cx:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            TOP + ph + 18.0,
            r.scenario.id()
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Writes the report under `out_dir` and returns the files written, in order.
pub fn emit_report(
    results: &[ScenarioResult],
    comparison: &ComparisonTable,
    format: ReportFormat,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, ScenarioError> {
    if results.is_empty() {
        return Err(ScenarioError::Input("no scenario results to report".into()));
    }
    let days_dir = out_dir.join("days");
    let plots_dir = out_dir.join("plots");
    fs::create_dir_all(&days_dir).map_err(io_err(&days_dir))?;
    let mut written = Vec::new();

    let path = out_dir.join("comparison.csv");
    write_file(&path, &comparison_csv(comparison)?)?;
    written.push(path);
    let path = out_dir.join("comparison.json");
    let mut json = serde_json::to_string_pretty(comparison)?;
    json.push('\n');
    write_file(&path, json.as_bytes())?;
    written.push(path);

    let mut ordered: Vec<&ScenarioResult> = results.iter().collect();
    ordered.sort_by_key(|r| r.kind);
    for r in &ordered {
        let path = days_dir.join(format!("{}.csv", r.kind.id()));
        write_file(&path, &days_csv(r)?)?;
        written.push(path);
    }
    if format == ReportFormat::Full {
        fs::create_dir_all(&plots_dir).map_err(io_err(&plots_dir))?;
        for r in &ordered {
            for d in &r.days {
                let path = plots_dir.join(format!("{}_{}.svg", d.date, r.kind.id()));
                write_file(&path, day_svg(r.kind.id(), d).as_bytes())?;
                written.push(path);
            }
        }
        let path = plots_dir.join("season_costs.svg");
        write_file(&path, season_svg(comparison).as_bytes())?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::SyntheticSeasonConfig;
    use crate::plant::PlantConfig;
    use crate::scenario::{compare, run_scenario, PerfectPredictor, ScenarioKind, ScenarioOptions, SeasonData};
    use crate::tariff::TariffSchedule;
    use chrono::NaiveDate;

    fn results(kinds: &[ScenarioKind], days: i64) -> Vec<ScenarioResult> {
        let start = NaiveDate::from_ymd_opt(2021, 7, 1).unwrap();
        let cfg = SyntheticSeasonConfig {
            start,
            end: start + chrono::Duration::days(days - 1),
            ..SyntheticSeasonConfig::default()
        };
        let data = SeasonData::synthetic(&cfg, start).unwrap();
        kinds
            .iter()
            .map(|k| {
                run_scenario(
                    *k,
                    &data,
                    &mut PerfectPredictor,
                    &PlantConfig::default(),
                    &TariffSchedule::beijing_2021(),
                    &ScenarioOptions::default(),
                )
                .unwrap()
            })
            .collect()
    }

    fn read_dir(dir: &Path) -> Vec<(String, Vec<u8>)> {
        let mut out = Vec::new();
        for sub in ["", "days", "plots"] {
            let Ok(entries) = fs::read_dir(dir.join(sub)) else {
                continue;
            };
            for e in entries {
                let p = e.unwrap().path();
                if p.is_file() {
                    out.push((
                        p.strip_prefix(dir).unwrap().display().to_string(),
                        fs::read(&p).unwrap(),
                    ));
                }
            }
        }
        out.sort();
        out
    }

    #[test]
    fn one_scenario() {
        let r = results(&[ScenarioKind::Fixed], 2);
        let table = compare(&r).unwrap();
        let dir = tempfile::tempdir().unwrap();
        emit_report(&r, &table, ReportFormat::Full, dir.path()).unwrap();
        let csv = fs::read_to_string(dir.path().join("comparison.csv")).unwrap();
        assert_eq!(csv.lines().count(), 2);
        assert!(csv.starts_with(&COMPARISON_CSV_HEADER.join(",")));
        let plots = fs::read_dir(dir.path().join("plots")).unwrap().count();
        assert_eq!(plots, 2 + 1);
        assert!(dir.path().join("plots/2021-07-01_fixed.svg").exists());
    }

    #[test]
    fn four_scenarios_thirty_days_and_stable_bytes() {
        let r = results(&ScenarioKind::ALL, 30);
        let table = compare(&r).unwrap();
        assert_eq!(table.rows.len(), 4);
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        emit_report(&r, &table, ReportFormat::Full, a.path()).unwrap();
        emit_report(&r, &table, ReportFormat::Full, b.path()).unwrap();
        let day_rows: usize = ScenarioKind::ALL
            .iter()
            .map(|k| {
                fs::read_to_string(a.path().join(format!("days/{}.csv", k.id())))
                    .unwrap()
                    .lines()
                    .count()
                    - 1
            })
            .sum();
        assert_eq!(day_rows, 120);
        assert_eq!(read_dir(a.path()), read_dir(b.path()));
        let back: ComparisonTable =
            serde_json::from_str(&fs::read_to_string(a.path().join("comparison.json")).unwrap()).unwrap();
        assert_eq!(back, table);
    }

    #[test]
    fn tables_only_and_errors() {
        let r = results(&[ScenarioKind::Fixed], 1);
        let table = compare(&r).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let files = emit_report(&r, &table, ReportFormat::Tables, dir.path()).unwrap();
        assert_eq!(files.len(), 3);
        assert!(!dir.path().join("plots").exists());
        assert!(emit_report(&[], &table, ReportFormat::Full, dir.path()).is_err());
        let blocker = dir.path().join("file");
        fs::write(&blocker, b"x").unwrap();
        assert!(matches!(
            emit_report(&r, &table, ReportFormat::Full, &blocker.join("sub")),
            Err(ScenarioError::Io { .. })
        ));
    }
}
