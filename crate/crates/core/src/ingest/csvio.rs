use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{NaiveDate, NaiveDateTime};

use super::{compute_cooling_load, IngestError, LoadRecord, LoadSeries, Provenance, WeatherRecord, WeatherSeries};

pub const LOAD_CSV_HEADER: [&str; 3] = ["timestamp", "building", "cooling_load_kw"];
pub const BAS_CSV_HEADER: [&str; 5] = ["timestamp", "building", "flow_m3h", "supply_c", "return_c"];
pub const WEATHER_CSV_HEADER: [&str; 5] = ["timestamp", "temp_c", "rh_pct", "solar_wm2", "wind_ms"];

/// Which rows of a multi-building load file make up the series.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum LoadSelection {
    /// Every row; duplicate timestamps are an error.
    #[default]
    All,
    /// Only rows of the named building.
    Building(String),
    /// Sum over buildings per timestamp (building name becomes `"total"`).
    Total,
}

/// Accepts `YYYY-MM-DDTHH:MM[:SS]` or the same with a space separator.
pub fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    const FORMATS: [&str; 4] = [
        "%Y-%m-%dT%H:%M:%S",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M:%S",
        "%Y-%m-%d %H:%M",
    ];
    let s = s.trim();
    FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
        .or_else(|| {
            // bare date means midnight
            NaiveDate::parse_from_str(s, "%Y-%m-%d")
                .ok()
                .and_then(|d| d.and_hms_opt(0, 0, 0))
        })
}

pub fn format_timestamp(ts: NaiveDateTime) -> String {
    ts.format("%Y-%m-%dT%H:%M:%S").to_string()
}

fn open(path: &Path) -> Result<std::fs::File, IngestError> {
    std::fs::File::open(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn check_header<R: Read>(rdr: &mut csv::Reader<R>, expected: &[&str], path: &Path) -> Result<(), IngestError> {
    let found = rdr.headers()?.clone();
    let ok = found.len() == expected.len() && found.iter().zip(expected).all(|(a, b)| a.trim() == *b);
    if !ok {
        return Err(IngestError::Header {
            path: path.to_path_buf(),
            found: found.iter().collect::<Vec<_>>().join(","),
            expected: expected.join(","),
        });
    }
    Ok(())
}

fn parse_f64(field: &str, name: &str) -> Result<f64, String> {
    field
        .trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| format!("{name}: cannot parse {field:?} as a number"))
}

/// Reads a load CSV from any reader. `path` is only used in diagnostics.
pub fn read_load_csv<R: Read>(reader: R, path: &Path, selection: &LoadSelection) -> Result<LoadSeries, IngestError> {
    read_rows(reader, path, &LOAD_CSV_HEADER, selection, |rec| {
        let load = parse_f64(&rec[2], "cooling_load_kw")?;
        if load < 0.0 {
            return Err(format!("cooling load {load} is negative"));
        }
        Ok(load)
    })
}

/// Reads a raw BAS export (`timestamp,building,flow_m3h,supply_c,return_c`)
/// and converts each row to cooling load with [`compute_cooling_load`].
pub fn read_bas_csv<R: Read>(reader: R, path: &Path, selection: &LoadSelection) -> Result<LoadSeries, IngestError> {
    read_rows(reader, path, &BAS_CSV_HEADER, selection, |rec| {
        let flow = parse_f64(&rec[2], "flow_m3h")?;
        let supply = parse_f64(&rec[3], "supply_c")?;
        let ret = parse_f64(&rec[4], "return_c")?;
        compute_cooling_load(flow, supply, ret).map_err(|e| e.to_string())
    })
}

pub fn bas_series_from_csv(path: impl AsRef<Path>, selection: &LoadSelection) -> Result<LoadSeries, IngestError> {
    let path = path.as_ref();
    read_bas_csv(open(path)?, path, selection)
}

fn read_rows<R: Read>(
    reader: R,
    path: &Path,
    header: &[&str],
    selection: &LoadSelection,
    value: impl Fn(&csv::StringRecord) -> Result<f64, String>,
) -> Result<LoadSeries, IngestError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    check_header(&mut rdr, header, path)?;
    let row_err = |line: u64, message: String| IngestError::Row {
        path: path.to_path_buf(),
        line,
        message,
    };

    // keyed by (timestamp, building) to catch duplicates with their line number
    let mut rows: BTreeMap<(NaiveDateTime, String), (f64, u64)> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() != header.len() {
            return Err(row_err(
                line,
                format!("expected {} fields, found {}", header.len(), rec.len()),
            ));
        }
        let ts = parse_timestamp(&rec[0]).ok_or_else(|| row_err(line, format!("bad timestamp {:?}", &rec[0])))?;
        let building = rec[1].to_string();
        if building.is_empty() {
            return Err(row_err(line, "empty building id".into()));
        }
        let load = value(&rec).map_err(|m| row_err(line, m))?;
        if let LoadSelection::Building(b) = selection {
            if &building != b {
                continue;
            }
        }
        if rows.insert((ts, building), (load, line)).is_some() {
            return Err(IngestError::Duplicate { timestamp: ts, line });
        }
    }

    let records = match selection {
        LoadSelection::Total => {
            let mut sums: BTreeMap<NaiveDateTime, f64> = BTreeMap::new();
            for ((ts, _), (load, _)) in rows {
                *sums.entry(ts).or_insert(0.0) += load;
            }
            sums.into_iter()
                .map(|(timestamp, cooling_load)| LoadRecord {
                    timestamp,
                    building: "total".into(),
                    cooling_load,
                })
                .collect()
        }
        _ => {
            let mut out: Vec<LoadRecord> = Vec::with_capacity(rows.len());
            for ((timestamp, building), (cooling_load, line)) in rows {
                if out.last().is_some_and(|r| r.timestamp == timestamp) {
                    return Err(IngestError::Duplicate { timestamp, line });
                }
                out.push(LoadRecord {
                    timestamp,
                    building,
                    cooling_load,
                });
            }
            out
        }
    };
    LoadSeries::new(records)
}

/// Reads a load CSV (`timestamp,building,cooling_load_kw`), sorting rows
/// chronologically and rejecting duplicates.
pub fn load_series_from_csv(path: impl AsRef<Path>, selection: &LoadSelection) -> Result<LoadSeries, IngestError> {
    let path = path.as_ref();
    read_load_csv(open(path)?, path, selection)
}

pub fn read_weather_csv<R: Read>(reader: R, path: &Path, provenance: Provenance) -> Result<WeatherSeries, IngestError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    check_header(&mut rdr, &WEATHER_CSV_HEADER, path)?;
    let row_err = |line: u64, message: String| IngestError::Row {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut rows: BTreeMap<NaiveDateTime, WeatherRecord> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() != 5 {
            return Err(row_err(line, format!("expected 5 fields, found {}", rec.len())));
        }
        let ts = parse_timestamp(&rec[0]).ok_or_else(|| row_err(line, format!("bad timestamp {:?}", &rec[0])))?;
        let num = |i: usize| parse_f64(&rec[i], WEATHER_CSV_HEADER[i]).map_err(|m| row_err(line, m));
        let r = WeatherRecord {
            timestamp: ts,
            temperature: num(1)?,
            relative_humidity: num(2)?,
            direct_solar: num(3)?,
            wind_speed: num(4)?,
        };
        r.validate().map_err(|m| row_err(line, m))?;
        if rows.insert(ts, r).is_some() {
            return Err(IngestError::Duplicate { timestamp: ts, line });
        }
    }
    WeatherSeries::new(provenance, rows.into_values().collect())
}

pub fn weather_series_from_csv(path: impl AsRef<Path>, provenance: Provenance) -> Result<WeatherSeries, IngestError> {
    let path = path.as_ref();
    read_weather_csv(open(path)?, path, provenance)
}

pub fn write_load_csv<W: Write>(series: &LoadSeries, out: W) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(LOAD_CSV_HEADER)?;
    for r in series.records() {
        w.write_record([
            format_timestamp(r.timestamp),
            r.building.clone(),
            format!("{:.3}", r.cooling_load),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_weather_csv<W: Write>(series: &WeatherSeries, out: W) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(WEATHER_CSV_HEADER)?;
    for r in series.records() {
        w.write_record([
            format_timestamp(r.timestamp),
            format!("{:.3}", r.temperature),
            format!("{:.3}", r.relative_humidity),
            format!("{:.3}", r.direct_solar),
            format!("{:.3}", r.wind_speed),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn read(text: &str, sel: &LoadSelection) -> Result<LoadSeries, IngestError> {
        read_load_csv(text.as_bytes(), Path::new("loads.csv"), sel)
    }

    fn day_csv() -> String {
        let mut s = String::from("timestamp,building,cooling_load_kw\n");
        // reversed order on purpose: the reader sorts
        for h in (0..24).rev() {
            s.push_str(&format!("2021-07-19T{h:02}:00:00,mall,{}\n", 100 + h));
        }
        s
    }

    #[test]
    fn well_formed_day() {
        let s = read(&day_csv(), &LoadSelection::All).unwrap();
        assert_eq!(s.len(), 24);
        assert_eq!(s.records()[0].cooling_load, 100.0);
        assert!(s.gaps().is_empty());
    }

    #[test]
    fn negative_load_reports_line() {
        let text = "timestamp,building,cooling_load_kw\n2021-07-19T00:00,mall,3\n2021-07-19T01:00,mall,-5\n";
        match read(text, &LoadSelection::All) {
            Err(IngestError::Row { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_timestamp_rejected() {
        let text = "timestamp,building,cooling_load_kw\n2021-07-19T00:00,mall,3\n2021-07-19T00:00,mall,4\n";
        assert!(matches!(
            read(text, &LoadSelection::All),
            Err(IngestError::Duplicate { .. })
        ));
        // same hour in two buildings is a duplicate unless selected or summed
        let text = "timestamp,building,cooling_load_kw\n2021-07-19T00:00,mall,3\n2021-07-19T00:00,office,4\n";
        assert!(matches!(
            read(text, &LoadSelection::All),
            Err(IngestError::Duplicate { .. })
        ));
        let total = read(text, &LoadSelection::Total).unwrap();
        assert_eq!(total.records()[0].cooling_load, 7.0);
        let office = read(text, &LoadSelection::Building("office".into())).unwrap();
        assert_eq!(office.records()[0].cooling_load, 4.0);
    }

    #[test]
    fn bas_export_converts_to_load() {
        let text = "timestamp,building,flow_m3h,supply_c,return_c\n\
                    2021-07-01T01:00:00,mall,100,7,12\n\
                    2021-07-01T00:00:00,mall,100,7,7\n";
        let s = read_bas_csv(text.as_bytes(), Path::new("bas.csv"), &LoadSelection::All).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.records()[0].cooling_load, 0.0);
        assert!((s.records()[1].cooling_load - 581.3888888888889).abs() < 1e-9);
        let bad = "timestamp,building,flow_m3h,supply_c,return_c\n2021-07-01T00:00:00,mall,50,10,8\n";
        let err = read_bas_csv(bad.as_bytes(), Path::new("bas.csv"), &LoadSelection::All).unwrap_err();
        assert!(matches!(err, IngestError::Row { line: 2, .. }), "{err}");
    }

    #[test]
    fn wrong_header() {
        let text = "time,building,load\n";
        assert!(matches!(
            read(text, &LoadSelection::All),
            Err(IngestError::Header { .. })
        ));
    }

    #[test]
    fn weather_round_trip() {
        let text =
            "timestamp,temp_c,rh_pct,solar_wm2,wind_ms\n2021-07-19T01:00,25.5,60,0,2.1\n2021-07-19T00:00,26,55,0,1.5\n";
        let w = read_weather_csv(text.as_bytes(), Path::new("w.csv"), Provenance::Historical).unwrap();
        assert_eq!(w.len(), 2);
        assert_eq!(w.records()[0].temperature, 26.0);
        let mut buf = Vec::new();
        write_weather_csv(&w, &mut buf).unwrap();
        let back = read_weather_csv(buf.as_slice(), Path::new("w.csv"), Provenance::Historical).unwrap();
        assert_eq!(back, w);
    }

    proptest! {
        // Arbitrary rows either fail with a diagnostic or produce a series
        // satisfying the type invariants.
        #[test]
        fn fuzzed_load_csv_respects_invariants(
            rows in prop::collection::vec((0u32..72, prop_oneof![Just("mall"), Just("office")], -50.0f64..5000.0), 0..60)
        ) {
            let mut text = String::from("timestamp,building,cooling_load_kw\n");
            for (h, b, v) in &rows {
                let day = 1 + h / 24;
                text.push_str(&format!("2021-07-{:02}T{:02}:00:00,{},{:.2}\n", day, h % 24, b, v));
            }
            if let Ok(series) = read(&text, &LoadSelection::Total) {
                let recs = series.records();
                prop_assert!(recs.iter().all(|r| r.cooling_load >= 0.0));
                prop_assert!(recs.windows(2).all(|w| w[0].timestamp < w[1].timestamp));
            }
        }
    }
}
