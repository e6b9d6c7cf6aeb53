//! Input features and sample assembly.

use std::fmt;
use std::str::FromStr;

use chrono::{Duration, NaiveDate, NaiveDateTime, NaiveTime, Timelike};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::ForecastError;
use crate::ingest::{mark_calendar, HolidaySet, LoadSeries, WeatherSeries};

/// The seven candidate inputs, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Feature {
    /// Outdoor temperature, °C.
    T,
    /// Relative humidity, %.
    H,
    /// Direct solar radiation, W/m².
    R,
    /// Wind speed, m/s.
    S,
    /// Weekday code, 1..=7 Monday..Sunday, 8 for holidays.
    W,
    /// Hour of day.
    O,
    /// Load at the same hour of the previous day, kW.
    L,
}

impl Feature {
    pub const ALL: [Feature; 7] = [
        Feature::T,
        Feature::H,
        Feature::R,
        Feature::S,
        Feature::W,
        Feature::O,
        Feature::L,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn letter(self) -> char {
        ['T', 'H', 'R', 'S', 'W', 'O', 'L'][self.index()]
    }

    pub fn from_letter(c: char) -> Option<Feature> {
        Feature::ALL.into_iter().find(|f| f.letter() == c.to_ascii_uppercase())
    }
}

/// A non-empty subset of [`Feature`], stored as bits in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FeatureMask(u8);

impl FeatureMask {
    pub const FULL: FeatureMask = FeatureMask(0x7f);

    pub fn from_bits(bits: u8) -> Result<Self, ForecastError> {
        if bits == 0 || bits > 0x7f {
            return Err(ForecastError::Config(format!(
                "feature mask bits {bits:#x} outside 1..=127"
            )));
        }
        Ok(FeatureMask(bits))
    }

    pub fn from_features(features: &[Feature]) -> Result<Self, ForecastError> {
        Self::from_bits(features.iter().fold(0, |b, f| b | 1 << f.index()))
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn contains(self, f: Feature) -> bool {
        self.0 & (1 << f.index()) != 0
    }

    pub fn features(self) -> Vec<Feature> {
        Feature::ALL.into_iter().filter(|f| self.contains(*f)).collect()
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// All 127 masks, by increasing bit pattern.
    pub fn all() -> impl Iterator<Item = FeatureMask> {
        (1u8..=0x7f).map(FeatureMask)
    }

    /// Tie-break order: fewer features first, then feature lists compared
    /// element-wise in canonical order.
    pub fn tie_break_cmp(self, other: FeatureMask) -> std::cmp::Ordering {
        self.len().cmp(&other.len()).then_with(|| {
            let a: Vec<usize> = self.features().iter().map(|f| f.index()).collect();
            let b: Vec<usize> = other.features().iter().map(|f| f.index()).collect();
            a.cmp(&b)
        })
    }
}

impl Default for FeatureMask {
    fn default() -> Self {
        FeatureMask::FULL
    }
}

impl fmt::Display for FeatureMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for feat in self.features() {
            write!(f, "{}", feat.letter())?;
        }
        Ok(())
    }
}

impl FromStr for FeatureMask {
    type Err = ForecastError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut feats = Vec::new();
        for c in s.trim().chars() {
            let f = Feature::from_letter(c)
                .ok_or_else(|| ForecastError::Config(format!("unknown feature letter {c:?} in {s:?}")))?;
            if feats.contains(&f) {
                return Err(ForecastError::Config(format!("feature {c} repeated in {s:?}")));
            }
            feats.push(f);
        }
        Self::from_features(&feats)
    }
}

impl Serialize for FeatureMask {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for FeatureMask {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Hours `[start, end)` of the target day averaged into the anchor input A.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnchorWindow {
    pub start_hour: u32,
    pub end_hour: u32,
}

impl AnchorWindow {
    pub fn new(start_hour: u32, end_hour: u32) -> Result<Self, ForecastError> {
        if start_hour >= end_hour || end_hour > 24 {
            return Err(ForecastError::Config(format!(
                "anchor window {start_hour}..{end_hour} is empty or past midnight"
            )));
        }
        Ok(Self { start_hour, end_hour })
    }
}

/// Values for the features of one target hour. Features outside the mask
/// stay `None`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: [Option<f64>; 7],
    pub anchor: Option<f64>,
}

impl FeatureVector {
    pub fn get(&self, f: Feature) -> Option<f64> {
        self.values[f.index()]
    }

    /// Model input row: mask features in canonical order, then A if asked.
    pub fn row(&self, mask: FeatureMask, anchored: bool) -> Result<Vec<f64>, ForecastError> {
        let mut row = Vec::with_capacity(mask.len() + 1);
        for f in mask.features() {
            row.push(self.get(f).ok_or(ForecastError::MaskMismatch(format!(
                "feature {} is missing",
                f.letter()
            )))?);
        }
        if anchored {
            row.push(
                self.anchor
                    .ok_or(ForecastError::MaskMismatch("anchor A is missing".into()))?,
            );
        }
        Ok(row)
    }
}

/// Where feature values come from.
#[derive(Debug, Clone, Copy)]
pub struct FeatureSource<'a> {
    pub loads: &'a LoadSeries,
    pub weather: &'a WeatherSeries,
    pub holidays: &'a HolidaySet,
}

pub(crate) fn at_hour(date: NaiveDate, hour: u32) -> NaiveDateTime {
    date.and_time(NaiveTime::MIN) + Duration::hours(hour as i64)
}

/// Mean observed load over the anchor window on `date`.
pub fn anchor_value(loads: &LoadSeries, date: NaiveDate, window: AnchorWindow) -> Result<f64, ForecastError> {
    let mut sum = 0.0;
    for h in window.start_hour..window.end_hour {
        let ts = at_hour(date, h);
        sum += loads.load_at(ts).ok_or_else(|| ForecastError::MissingData {
            what: "observed load for the anchor window".into(),
            at: ts,
        })?;
    }
    Ok(sum / (window.end_hour - window.start_hour) as f64)
}

/// Builds the inputs for `target` restricted to `mask`, plus A when an
/// anchor window is given.
pub fn assemble_features(
    src: &FeatureSource<'_>,
    mask: FeatureMask,
    target: NaiveDateTime,
    anchor: Option<AnchorWindow>,
) -> Result<FeatureVector, ForecastError> {
    let mut v = FeatureVector::default();
    let needs_weather = [Feature::T, Feature::H, Feature::R, Feature::S]
        .iter()
        .any(|f| mask.contains(*f));
    if needs_weather {
        let w = src.weather.at(target).ok_or_else(|| ForecastError::MissingData {
            what: "weather".into(),
            at: target,
        })?;
        for (f, val) in [
            (Feature::T, w.temperature),
            (Feature::H, w.relative_humidity),
            (Feature::R, w.direct_solar),
            (Feature::S, w.wind_speed),
        ] {
            if mask.contains(f) {
                v.values[f.index()] = Some(val);
            }
        }
    }
    if mask.contains(Feature::W) {
        v.values[Feature::W.index()] = Some(mark_calendar(target.date(), src.holidays).weekday_code as f64);
    }
    if mask.contains(Feature::O) {
        v.values[Feature::O.index()] = Some(target.hour() as f64);
    }
    if mask.contains(Feature::L) {
        let prev = target - Duration::days(1);
        let l = src.loads.load_at(prev).ok_or_else(|| ForecastError::MissingData {
            what: "previous-day load (feature L)".into(),
            at: prev,
        })?;
        v.values[Feature::L.index()] = Some(l);
    }
    if let Some(win) = anchor {
        v.anchor = Some(anchor_value(src.loads, target.date(), win)?);
    }
    Ok(v)
}

/// Complete rows (all seven features and the target, plus A when anchored),
/// kept so that any mask can be projected out without changing the row set.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SampleSet {
    pub timestamps: Vec<NaiveDateTime>,
    pub features: Vec<[f64; 7]>,
    pub anchors: Option<Vec<f64>>,
    pub targets: Vec<f64>,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn is_anchored(&self) -> bool {
        self.anchors.is_some()
    }

    /// Rows for `targets` whose inputs and observed load are all available;
    /// incomplete rows are skipped.
    pub fn build(
        src: &FeatureSource<'_>,
        targets: impl IntoIterator<Item = NaiveDateTime>,
        anchor: Option<AnchorWindow>,
    ) -> SampleSet {
        let mut set = SampleSet {
            anchors: anchor.map(|_| Vec::new()),
            ..SampleSet::default()
        };
        for ts in targets {
            let Some(y) = src.loads.load_at(ts) else { continue };
            let Ok(v) = assemble_features(src, FeatureMask::FULL, ts, anchor) else {
                continue;
            };
            set.push(ts, &v, y);
        }
        set
    }

    /// Appends a row from a fully populated vector.
    pub fn push(&mut self, ts: NaiveDateTime, v: &FeatureVector, target: f64) {
        let mut row = [0.0; 7];
        for f in Feature::ALL {
            row[f.index()] = v.get(f).expect("full feature vector");
        }
        self.timestamps.push(ts);
        self.features.push(row);
        if let Some(a) = &mut self.anchors {
            a.push(v.anchor.expect("anchored vector"));
        }
        self.targets.push(target);
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> SampleSet {
        SampleSet {
            timestamps: indices.iter().map(|&i| self.timestamps[i]).collect(),
            features: indices.iter().map(|&i| self.features[i]).collect(),
            anchors: self.anchors.as_ref().map(|a| indices.iter().map(|&i| a[i]).collect()),
            targets: indices.iter().map(|&i| self.targets[i]).collect(),
        }
    }

    /// Column-major model inputs for `mask` (A last when anchored).
    pub fn project(&self, mask: FeatureMask) -> Dataset {
        let mut columns: Vec<Vec<f64>> = mask
            .features()
            .iter()
            .map(|f| self.features.iter().map(|r| r[f.index()]).collect())
            .collect();
        if let Some(a) = &self.anchors {
            columns.push(a.clone());
        }
        Dataset {
            columns,
            targets: self.targets.clone(),
        }
    }

    /// Earliest and latest timestamps.
    pub fn span(&self) -> Option<(NaiveDateTime, NaiveDateTime)> {
        Some((*self.timestamps.iter().min()?, *self.timestamps.iter().max()?))
    }
}

/// Numeric training matrix, one column per input.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub columns: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
}

impl Dataset {
    pub fn from_rows(rows: &[Vec<f64>], targets: Vec<f64>) -> Dataset {
        let p = rows.first().map_or(0, Vec::len);
        let columns = (0..p).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
        Dataset { columns, targets }
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{parse_timestamp, Provenance, WeatherRecord};

    fn day() -> NaiveDate {
        NaiveDate::from_ymd_opt(2021, 7, 21).unwrap()
    }

    fn weather(start: NaiveDateTime, hours: usize) -> WeatherSeries {
        let recs = (0..hours)
            .map(|i| WeatherRecord {
                timestamp: start + Duration::hours(i as i64),
                temperature: 25.0 + (i % 24) as f64 * 0.1,
                relative_humidity: 60.0,
                direct_solar: 100.0,
                wind_speed: 2.0,
            })
            .collect();
        WeatherSeries::new(Provenance::Historical, recs).unwrap()
    }

    #[test]
    fn mask_text_and_order() {
        let m: FeatureMask = "THRSOL".parse().unwrap();
        assert_eq!(m.to_string(), "THRSOL");
        assert_eq!(m.len(), 6);
        assert!(!m.contains(Feature::W));
        assert_eq!("lot".parse::<FeatureMask>().unwrap().to_string(), "TOL");
        assert!("".parse::<FeatureMask>().is_err());
        assert!("TX".parse::<FeatureMask>().is_err());
        assert_eq!(FeatureMask::all().count(), 127);
        let mut singles: Vec<FeatureMask> = FeatureMask::all().filter(|m| m.len() == 1).collect();
        singles.sort_by(|a, b| a.tie_break_cmp(*b));
        assert_eq!(singles[0].to_string(), "T");
        let th: FeatureMask = "TH".parse().unwrap();
        let tr: FeatureMask = "TR".parse().unwrap();
        assert!(th.tie_break_cmp(tr).is_lt());
        assert!(FeatureMask::from_bits(0).is_err());
        assert!(FeatureMask::from_bits(128).is_err());
    }

    #[test]
    fn hour_only() {
        let loads = LoadSeries::default();
        let w = WeatherSeries::empty(Provenance::Historical);
        let hol = HolidaySet::default();
        let src = FeatureSource {
            loads: &loads,
            weather: &w,
            holidays: &hol,
        };
        let v = assemble_features(&src, "O".parse().unwrap(), at_hour(day(), 13), None).unwrap();
        assert_eq!(v.get(Feature::O), Some(13.0));
        assert_eq!(v.values.iter().filter(|x| x.is_some()).count(), 1);
    }

    #[test]
    fn previous_day_load() {
        let start = at_hour(day() - Duration::days(1), 0);
        let loads = LoadSeries::from_values("b", start, &[500.0; 24]).unwrap();
        let w = WeatherSeries::empty(Provenance::Historical);
        let hol = HolidaySet::default();
        let src = FeatureSource {
            loads: &loads,
            weather: &w,
            holidays: &hol,
        };
        let v = assemble_features(&src, "L".parse().unwrap(), at_hour(day(), 9), None).unwrap();
        assert_eq!(v.get(Feature::L), Some(500.0));
        let err = assemble_features(&src, "L".parse().unwrap(), at_hour(day() + Duration::days(2), 9), None);
        assert!(matches!(err, Err(ForecastError::MissingData { .. })));
    }

    #[test]
    fn anchor_mean() {
        let mut values = [0.0; 24];
        values[9..15].fill(1000.0);
        let loads = LoadSeries::from_values("b", at_hour(day(), 0), &values[..15]).unwrap();
        let w = WeatherSeries::empty(Provenance::Historical);
        let hol = HolidaySet::default();
        let src = FeatureSource {
            loads: &loads,
            weather: &w,
            holidays: &hol,
        };
        let win = AnchorWindow::new(9, 15).unwrap();
        let v = assemble_features(&src, "O".parse().unwrap(), at_hour(day(), 15), Some(win)).unwrap();
        assert_eq!(v.anchor, Some(1000.0));
        // hour 15 itself is not observed yet
        assert!(anchor_value(&loads, day(), AnchorWindow::new(9, 16).unwrap()).is_err());
    }

    #[test]
    fn weekday_code_uses_holidays() {
        let hol = HolidaySet::new([day()]);
        let loads = LoadSeries::default();
        let w = WeatherSeries::empty(Provenance::Historical);
        let src = FeatureSource {
            loads: &loads,
            weather: &w,
            holidays: &hol,
        };
        let v = assemble_features(&src, "W".parse().unwrap(), at_hour(day(), 1), None).unwrap();
        assert_eq!(v.get(Feature::W), Some(8.0));
        let v = assemble_features(&src, "W".parse().unwrap(), at_hour(day() + Duration::days(1), 1), None).unwrap();
        assert_eq!(v.get(Feature::W), Some(4.0));
    }

    #[test]
    fn sample_set_skips_incomplete_rows() {
        let start = parse_timestamp("2021-07-20T00:00").unwrap();
        let values: Vec<f64> = (0..48).map(|i| 1000.0 + i as f64).collect();
        let loads = LoadSeries::from_values("b", start, &values).unwrap();
        let w = weather(start, 48);
        let hol = HolidaySet::default();
        let src = FeatureSource {
            loads: &loads,
            weather: &w,
            holidays: &hol,
        };
        let targets = (0..48).map(|i| start + Duration::hours(i));
        let set = SampleSet::build(&src, targets, None);
        // the first day has no previous-day load
        assert_eq!(set.len(), 24);
        let ds = set.project("TOL".parse().unwrap());
        assert_eq!(ds.n_features(), 3);
        assert_eq!(ds.row(0), vec![25.0, 0.0, 1000.0]);
        assert_eq!(ds.targets[0], 1024.0);
    }
}
