use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::Datelike;
use serde::Serialize;
use serde_json::json;

use tesopt::dispatch::{plan_day_with, IceState};
use tesopt::forecast::{
    compute_metrics, read_predictions, write_predictions, Forecaster, MiddayVariant, PipelineConfig,
};
use tesopt::ingest::{
    bas_series_from_csv, load_series_from_csv, weather_series_from_csv, write_load_csv, write_weather_csv, HolidaySet,
    LoadSelection, Provenance,
};
use tesopt::scenario::{
    compare as compare_results, emit_report, run_season, ReportFormat, ScenarioKind, ScenarioResult, SeasonConfig,
};

use crate::error::{io_error, CliError, Exit, OrExit, Stage};
use crate::manifest::{RunManifest, MANIFEST_FILE};
use crate::{CompareArgs, IngestArgs, PlanArgs, PredictArgs, ReportKind, SimulateArgs, SynthArgs, TuneArgs};

pub(crate) fn load_season(path: &Path) -> Result<SeasonConfig, CliError> {
    SeasonConfig::from_path(path).or_exit(Stage::Config, "scenario::SeasonConfig::from_path")
}

pub(crate) fn load_pipeline(cfg: &SeasonConfig, seed: Option<u64>) -> Result<PipelineConfig, CliError> {
    let mut p = cfg
        .pipeline()
        .or_exit(Stage::Config, "forecast::PipelineConfig::from_json")?;
    if let Some(s) = seed {
        p.seed = s;
    }
    Ok(p)
}

pub(crate) fn config_paths(cfg: &SeasonConfig, season: &Path) -> Vec<PathBuf> {
    let f = &cfg.files;
    std::iter::once(season.to_path_buf())
        .chain([&f.pipeline, &f.plant, &f.tariff].into_iter().flatten().cloned())
        .collect()
}

/// Output directories must not be an input directory: no command mutates its inputs.
pub(crate) fn prepare_out(out: &Path, inputs: &[&Path]) -> Result<(), CliError> {
    std::fs::create_dir_all(out).map_err(|e| io_error("cli::output", out, e))?;
    let canon = |p: &Path| p.canonicalize().ok();
    if inputs.iter().any(|i| canon(i).is_some() && canon(i) == canon(out)) {
        return Err(CliError::new(
            Exit::Usage,
            "cli::output",
            format!("output directory {} is also an input", out.display()),
        ));
    }
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| io_error("cli::output", path, e))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("output serializes") + "\n";
    std::fs::write(path, text).map_err(|e| io_error("cli::output", path, e))
}

pub fn synth(a: &SynthArgs) -> Result<(), CliError> {
    let mut cfg = load_season(&a.config.config)?;
    if let Some(s) = a.seed {
        cfg.synthetic.seed = s;
    }
    prepare_out(&a.out, &[])?;
    let data = cfg
        .synthetic_data()
        .or_exit(Stage::Config, "ingest::generate_synthetic_season")?;
    let paths = data
        .write_dir(&a.out)
        .or_exit(Stage::Run, "scenario::SeasonData::write_dir")?;
    let mut m = RunManifest::new("synth");
    m.config_paths = vec![a.config.config.clone()];
    m.seed = Some(cfg.synthetic.seed);
    for p in &paths {
        m.output(&a.out, p);
    }
    m.write(&a.out)?;
    println!(
        "{} hourly records from {} to {} in {}",
        data.loads.len(),
        cfg.synthetic.start,
        cfg.synthetic.end,
        a.out.display()
    );
    Ok(())
}

pub fn ingest(a: &IngestArgs) -> Result<(), CliError> {
    const OP: &str = "ingest::load_series_from_csv";
    prepare_out(&a.out, &[&a.data])?;
    let selection = match (&a.building, a.total) {
        (Some(b), _) => LoadSelection::Building(b.clone()),
        (None, true) => LoadSelection::Total,
        (None, false) => LoadSelection::All,
    };
    let mut m = RunManifest::new("ingest");
    let bas = a.data.join("bas.csv");
    let (loads, load_source) = if bas.exists() {
        (
            bas_series_from_csv(&bas, &selection).or_exit(Stage::Data, "ingest::compute_cooling_load")?,
            bas,
        )
    } else {
        let p = a.data.join("loads.csv");
        (load_series_from_csv(&p, &selection).or_exit(Stage::Data, OP)?, p)
    };
    m.inputs.push(load_source);
    let wpath = a.data.join("weather.csv");
    let weather =
        weather_series_from_csv(&wpath, Provenance::Historical).or_exit(Stage::Data, "ingest::read_weather")?;
    m.inputs.push(wpath);
    let fpath = a.data.join("forecast_weather.csv");
    let forecast = if fpath.exists() {
        m.inputs.push(fpath.clone());
        weather_series_from_csv(&fpath, Provenance::Forecast).or_exit(Stage::Data, "ingest::read_weather")?
    } else {
        weather.clone().with_provenance(Provenance::Forecast)
    };
    let hpath = a.data.join("holidays.txt");
    let holidays = if hpath.exists() {
        m.inputs.push(hpath.clone());
        HolidaySet::from_file(&hpath).or_exit(Stage::Data, "ingest::HolidaySet::from_file")?
    } else {
        HolidaySet::default()
    };
    let uncovered: Vec<String> = loads
        .records()
        .iter()
        .filter(|r| weather.at(r.timestamp).is_none())
        .map(|r| tesopt::ingest::format_timestamp(r.timestamp))
        .collect();
    let outputs = [
        "loads.csv",
        "weather.csv",
        "forecast_weather.csv",
        "holidays.txt",
        "ingest_report.json",
    ]
    .map(|f| a.out.join(f));
    write_load_csv(&loads, create(&outputs[0])?).or_exit(Stage::Run, "ingest::write_load_csv")?;
    write_weather_csv(&weather, create(&outputs[1])?).or_exit(Stage::Run, "ingest::write_weather_csv")?;
    write_weather_csv(&forecast, create(&outputs[2])?).or_exit(Stage::Run, "ingest::write_weather_csv")?;
    std::fs::write(&outputs[3], holidays.to_text()).map_err(|e| io_error("cli::output", &outputs[3], e))?;
    let fmt = |ts: Option<chrono::NaiveDateTime>| ts.map(tesopt::ingest::format_timestamp);
    let report = json!({
        "load_records": loads.len(),
        "weather_records": weather.len(),
        "first": fmt(loads.first_timestamp()),
        "last": fmt(loads.last_timestamp()),
        "load_gaps": loads.gaps().into_iter().map(tesopt::ingest::format_timestamp).collect::<Vec<_>>(),
        "weather_gaps": weather.gaps().into_iter().map(tesopt::ingest::format_timestamp).collect::<Vec<_>>(),
        "load_hours_without_weather": uncovered,
        "holidays": holidays.len(),
    });
    write_json(&outputs[4], &report)?;
    for p in &outputs {
        m.output(&a.out, p);
    }
    m.write(&a.out)?;
    println!(
        "{} load records ({} gap hours), {} weather records ({} gap hours)",
        loads.len(),
        loads.gaps().len(),
        weather.len(),
        weather.gaps().len()
    );
    Ok(())
}

pub fn tune(a: &TuneArgs) -> Result<(), CliError> {
    let cfg = load_season(&a.config.config)?;
    let pipeline = load_pipeline(&cfg, a.seed)?;
    prepare_out(&a.out, &[&a.data])?;
    let data = cfg
        .read_data(&a.data)
        .or_exit(Stage::Data, "scenario::SeasonData::from_dir")?;
    let date = a.date.unwrap_or(cfg.eval_start);
    let report = tesopt::forecast::tune(&pipeline, &data.history(), date).or_exit(Stage::Run, "forecast::tune")?;
    let (tune_path, cfg_path) = (a.out.join("tune.json"), a.out.join("pipeline_tuned.json"));
    write_json(&tune_path, &report)?;
    std::fs::write(&cfg_path, report.tuned_config(&pipeline).to_json() + "\n")
        .map_err(|e| io_error("cli::output", &cfg_path, e))?;
    let mut m = RunManifest::new("tune");
    m.config_paths = config_paths(&cfg, &a.config.config);
    m.seed = Some(pipeline.seed);
    m.inputs.push(a.data.clone());
    m.output(&a.out, &tune_path);
    m.output(&a.out, &cfg_path);
    m.write(&a.out)?;
    let cv = report.grid.as_ref().map(|g| g.metrics.mae);
    println!(
        "{}: {} on mask {} from {} samples{}",
        report.date,
        report.params.algorithm(),
        report.mask,
        report.samples,
        cv.map_or(String::new(), |v| format!(", CV MAE {v:.1} kW"))
    );
    Ok(())
}

fn variant_of(kind: ScenarioKind) -> Result<MiddayVariant, CliError> {
    kind.variant().ok_or_else(|| {
        CliError::new(
            Exit::Config,
            "forecast::Forecaster",
            "the fixed scenario issues no forecasts; use day-ahead, mid-day6 or mid-day24",
        )
    })
}

pub fn predict(a: &PredictArgs) -> Result<(), CliError> {
    let cfg = load_season(&a.config.config)?;
    let variant = variant_of(a.scenario)?;
    let pipeline = PipelineConfig {
        midday: variant,
        ..load_pipeline(&cfg, a.seed)?
    };
    prepare_out(&a.out, &[&a.data])?;
    let data = cfg
        .read_data(&a.data)
        .or_exit(Stage::Data, "scenario::SeasonData::from_dir")?;
    let mut f = Forecaster::new(pipeline.clone()).or_exit(Stage::Config, "forecast::Forecaster::new")?;
    let mut records = Vec::new();
    let (mut actual, mut effective, mut day_ahead) = (Vec::new(), Vec::new(), Vec::new());
    for date in data.dates() {
        let fc = f
            .forecast_day(&data.history(), &data.forecast_weather, date)
            .or_exit(Stage::Run, "forecast::day_ahead_predict")?;
        records.extend(fc.records());
        if let Some(obs) = data.actual_day(date) {
            actual.extend(obs);
            effective.extend(fc.effective());
            day_ahead.extend(fc.day_ahead);
        }
    }
    let pred_path = a.out.join("predictions.csv");
    write_predictions(create(&pred_path)?, &records).or_exit(Stage::Run, "forecast::write_predictions")?;
    let metrics = |p: &[f64]| compute_metrics(&actual, p).ok();
    let summary = json!({
        "variant": variant,
        "days": data.dates().len(),
        "effective": metrics(&effective),
        "day_ahead": metrics(&day_ahead),
    });
    let metrics_path = a.out.join("metrics.json");
    write_json(&metrics_path, &summary)?;
    let mut m = RunManifest::new("predict");
    m.config_paths = config_paths(&cfg, &a.config.config);
    m.seed = Some(pipeline.seed);
    m.inputs.push(a.data.clone());
    m.output(&a.out, &pred_path);
    m.output(&a.out, &metrics_path);
    m.write(&a.out)?;
    match metrics(&effective) {
        Some(mt) => println!(
            "{} forecast rows over {} days; MAE {:.1} kW, RMSE {:.1} kW",
            records.len(),
            data.dates().len(),
            mt.mae,
            mt.rmse
        ),
        None => println!("{} forecast rows over {} days", records.len(), data.dates().len()),
    }
    Ok(())
}

pub fn plan(a: &PlanArgs) -> Result<(), CliError> {
    const OP: &str = "dispatch::plan_day";
    let cfg = load_season(&a.config.config)?;
    let tariff = cfg
        .tariff()
        .or_exit(Stage::Config, "tariff::TariffSchedule::from_path")?;
    let plant = cfg.plant().or_exit(Stage::Config, "plant::PlantConfig::from_path")?;
    prepare_out(&a.out, &[])?;
    let file = File::open(&a.predictions).map_err(|e| io_error("forecast::read_predictions", &a.predictions, e))?;
    let rows = read_predictions(BufReader::new(file)).or_exit(Stage::Data, "forecast::read_predictions")?;
    let date = match a.date.or_else(|| rows.first().map(|r| r.timestamp.date())) {
        Some(d) => d,
        None => return Err(CliError::new(Exit::Data, OP, "prediction file is empty")),
    };
    let midnight = date.and_hms_opt(0, 0, 0).unwrap();
    let mut loads = [f64::NAN; 24];
    for r in rows
        .iter()
        .filter(|r| r.issued_at == midnight && r.timestamp.date() == date)
    {
        loads[chrono::Timelike::hour(&r.timestamp) as usize] = r.predicted_kw;
    }
    let month = a.month.unwrap_or(date.month());
    let seq = tariff
        .hour_sequence(month)
        .or_exit(Stage::Config, "tariff::derive_hour_sequence")?;
    if let Some(h) = seq.hours().iter().find(|h| loads[**h as usize].is_nan()) {
        return Err(CliError::new(
            Exit::Data,
            OP,
            format!("no day-ahead prediction for {date} hour {h}"),
        ));
    }
    let capacity = plant.tank.capacity_kwh;
    let ice = IceState::new(a.ice.unwrap_or(capacity), capacity).or_exit(Stage::Data, OP)?;
    let control = plan_day_with(cfg.options.rule, &ice, &loads, &seq).or_exit(Stage::Run, OP)?;
    let out = json!({
        "date": date,
        "month": month,
        "ice_kwh": ice.stored_kwh,
        "hour_sequence": seq.hours(),
        "plan": control,
        "planned_ice_kwh": control.planned_ice(&loads),
    });
    let path = a.out.join("plan.json");
    write_json(&path, &out)?;
    let mut m = RunManifest::new("plan");
    m.config_paths = config_paths(&cfg, &a.config.config);
    m.inputs.push(a.predictions.clone());
    m.output(&a.out, &path);
    m.write(&a.out)?;
    println!(
        "{date}: ice at hours {:?}, chillers at {:?}",
        control.ice_hours(),
        control.chiller_hours()
    );
    Ok(())
}

pub fn simulate(a: &SimulateArgs) -> Result<(), CliError> {
    let cfg = load_season(&a.config.config)?;
    let pipeline = load_pipeline(&cfg, a.seed)?;
    let plant = cfg.plant().or_exit(Stage::Config, "plant::PlantConfig::from_path")?;
    let tariff = cfg
        .tariff()
        .or_exit(Stage::Config, "tariff::TariffSchedule::from_path")?;
    prepare_out(&a.out, &[&a.data])?;
    let data = cfg
        .read_data(&a.data)
        .or_exit(Stage::Data, "scenario::SeasonData::from_dir")?;
    let mut kinds = if a.scenario.is_empty() {
        ScenarioKind::ALL.to_vec()
    } else {
        a.scenario.clone()
    };
    kinds.sort();
    kinds.dedup();
    let results = run_season(&kinds, &data, &pipeline, &plant, &tariff, &cfg.options)
        .or_exit(Stage::Run, "scenario::run_scenario")?;
    let mut m = RunManifest::new("simulate");
    m.config_paths = config_paths(&cfg, &a.config.config);
    m.seed = Some(pipeline.seed);
    m.inputs.push(a.data.clone());
    for r in &results {
        let path = a.out.join(format!("{}.json", r.kind.id()));
        let mut w = create(&path)?;
        serde_json::to_writer(&mut w, r).expect("result serializes");
        w.write_all(b"\n")
            .and_then(|_| w.flush())
            .map_err(|e| io_error("cli::output", &path, e))?;
        m.output(&a.out, &path);
        println!(
            "{:<10} {:>4} days {:>12.1} RMB {:>12.1} kWh{}",
            r.kind.id(),
            r.days.len(),
            r.cost_rmb,
            r.total_kwh,
            if r.failures.is_empty() {
                String::new()
            } else {
                format!("  ({} failed days)", r.failures.len())
            }
        );
        for f in &r.failures {
            log::warn!("{} {}: {}", r.kind, f.date, f.message);
        }
    }
    m.write(&a.out)?;
    Ok(())
}

fn read_results(dir: &Path) -> Result<(Vec<ScenarioResult>, Vec<PathBuf>), CliError> {
    const OP: &str = "scenario::compare";
    let entries = std::fs::read_dir(dir).map_err(|e| io_error(OP, dir, e))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json") && !p.ends_with(MANIFEST_FILE))
        .collect();
    paths.sort();
    let mut results = Vec::new();
    for p in &paths {
        let file = File::open(p).map_err(|e| io_error(OP, p, e))?;
        let r: ScenarioResult = serde_json::from_reader(BufReader::new(file))
            .map_err(|e| CliError::new(Exit::Data, OP, format!("{}: {e}", p.display())))?;
        results.push(r);
    }
    Ok((results, paths))
}

pub fn compare(a: &CompareArgs) -> Result<(), CliError> {
    const OP: &str = "scenario::compare";
    let (results, inputs) = read_results(&a.data)?;
    if results.is_empty() {
        return Err(CliError::new(
            Exit::Data,
            OP,
            format!("no scenario results in {}", a.data.display()),
        ));
    }
    let table = compare_results(&results).or_exit(Stage::Data, OP)?;
    prepare_out(&a.out, &[&a.data])?;
    let format = match a.format {
        ReportKind::Full => ReportFormat::Full,
        ReportKind::Tables => ReportFormat::Tables,
    };
    let written = emit_report(&results, &table, format, &a.out).or_exit(Stage::Run, "scenario::emit_report")?;
    let mut m = RunManifest::new("compare");
    m.inputs = inputs;
    for p in &written {
        m.output(&a.out, p);
    }
    m.write(&a.out)?;
    println!(
        "{:<10} {:>5} {:>14} {:>12} {:>8}",
        "scenario", "days", "cost_rmb", "saved_rmb", "saved_%"
    );
    for r in &table.rows {
        let opt = |v: Option<f64>, d: usize| v.map_or("-".to_string(), |x| format!("{x:.d$}"));
        println!(
            "{:<10} {:>5} {:>14.1} {:>12} {:>8}",
            r.scenario.id(),
            r.days,
            r.cost_rmb,
            opt(r.reduction_rmb, 1),
            opt(r.reduction_pct, 2)
        );
    }
    Ok(())
}
