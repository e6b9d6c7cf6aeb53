//! Month-dependent time-of-use tariff and the ice-allocation hour sequence.
//!
//! Hours are labelled by their starting clock hour: hour 11 is 11:00–12:00.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TariffError {
    #[error("tariff config: {0}")]
    Config(String),
    #[error("month {month} hour {hour} is not covered by the tariff")]
    Uncovered { month: u32, hour: u32 },
    #[error("reading tariff {path}: {message}")]
    Read { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    SuperPeak,
    Peak,
    PartialPeak,
    OffPeak,
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tier::SuperPeak => "super_peak",
            Tier::Peak => "peak",
            Tier::PartialPeak => "partial_peak",
            Tier::OffPeak => "off_peak",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TierRate {
    pub tier: Tier,
    /// RMB/kWh
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TariffPeriod {
    pub hours: Vec<u32>,
    pub tier: Tier,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TariffProfile {
    /// Inclusive `[first, last]` month.
    pub month_range: [u32; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub periods: Vec<TariffPeriod>,
}

/// JSON form of a tariff.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TariffFile {
    #[serde(default)]
    pub name: String,
    pub profiles: Vec<TariffProfile>,
    /// Replaces the derived hour sequence for every month.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hour_sequence_override: Option<Vec<u32>>,
}

const BEIJING_2021: &str = include_str!("../../../configs/tariff_beijing_2021.json");

/// Validated tariff: every covered month maps all 24 hours to a tier and rate.
#[derive(Debug, Clone, PartialEq)]
pub struct TariffSchedule {
    name: String,
    months: BTreeMap<u32, [TierRate; 24]>,
    sequence_override: Option<Vec<u32>>,
}

/// Ordered daytime hours in which stored ice is offered.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HourSequence(Vec<u32>);

impl HourSequence {
    pub fn new(hours: Vec<u32>) -> Result<Self, TariffError> {
        let mut seen = [false; 24];
        for &h in &hours {
            if h > 23 || std::mem::replace(&mut seen[h as usize], true) {
                return Err(TariffError::Config(format!(
                    "hour sequence has invalid or repeated hour {h}"
                )));
            }
        }
        Ok(Self(hours))
    }

    pub fn hours(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, hour: u32) -> bool {
        self.0.contains(&hour)
    }

    /// The sequence with every hour before `hour` removed.
    pub fn from_hour(&self, hour: u32) -> HourSequence {
        HourSequence(self.0.iter().copied().filter(|&h| h >= hour).collect())
    }
}

impl TariffSchedule {
    pub fn from_tariff_file(file: TariffFile) -> Result<Self, TariffError> {
        let mut months = BTreeMap::new();
        for profile in &file.profiles {
            let [first, last] = profile.month_range;
            if !(1..=12).contains(&first) || !(1..=12).contains(&last) || first > last {
                return Err(TariffError::Config(format!("bad month range {first}..{last}")));
            }
            let mut slots: [Option<TierRate>; 24] = [None; 24];
            for p in &profile.periods {
                if !(p.rate.is_finite() && p.rate > 0.0) {
                    return Err(TariffError::Config(format!("rate {} must be > 0", p.rate)));
                }
                for &h in &p.hours {
                    if h > 23 {
                        return Err(TariffError::Config(format!("hour {h} out of range")));
                    }
                    if slots[h as usize].is_some() {
                        return Err(TariffError::Config(format!(
                            "hour {h} assigned twice in months {first}..{last}"
                        )));
                    }
                    slots[h as usize] = Some(TierRate {
                        tier: p.tier,
                        rate: p.rate,
                    });
                }
            }
            let mut day = [TierRate {
                tier: Tier::OffPeak,
                rate: 0.0,
            }; 24];
            for (h, s) in slots.iter().enumerate() {
                day[h] =
                    s.ok_or_else(|| TariffError::Config(format!("hour {h} not covered in months {first}..{last}")))?;
            }
            check_tier_rates(&day, first)?;
            for m in first..=last {
                if months.insert(m, day).is_some() {
                    return Err(TariffError::Config(format!("month {m} appears in two profiles")));
                }
            }
        }
        if let Some(seq) = &file.hour_sequence_override {
            HourSequence::new(seq.clone())?;
        }
        Ok(Self {
            name: file.name,
            months,
            sequence_override: file.hour_sequence_override,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, TariffError> {
        let file: TariffFile = serde_json::from_str(text).map_err(|e| TariffError::Config(e.to_string()))?;
        Self::from_tariff_file(file)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, TariffError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| TariffError::Read {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json(&text)
    }

    /// Beijing commercial TOU tariff, 2021. July and August carry the
    /// super-peak; other months reclassify those hours as peak.
    pub fn beijing_2021() -> Self {
        Self::from_json(BEIJING_2021).expect("shipped tariff is valid")
    }

    pub fn default_json() -> &'static str {
        BEIJING_2021
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn covers(&self, month: u32) -> bool {
        self.months.contains_key(&month)
    }

    fn slot(&self, month: u32, hour: u32) -> Result<TierRate, TariffError> {
        if hour > 23 {
            return Err(TariffError::Uncovered { month, hour });
        }
        self.months
            .get(&month)
            .map(|d| d[hour as usize])
            .ok_or(TariffError::Uncovered { month, hour })
    }

    pub fn rate_at(&self, month: u32, hour: u32) -> Result<f64, TariffError> {
        self.slot(month, hour).map(|s| s.rate)
    }

    pub fn tier_at(&self, month: u32, hour: u32) -> Result<Tier, TariffError> {
        self.slot(month, hour).map(|s| s.tier)
    }

    /// All 24 rates of a month.
    pub fn rates(&self, month: u32) -> Result<[f64; 24], TariffError> {
        let day = self
            .months
            .get(&month)
            .ok_or(TariffError::Uncovered { month, hour: 0 })?;
        Ok(day.map(|s| s.rate))
    }

    /// Non-off-peak hours of the month, chronological.
    pub fn daytime_hours(&self, month: u32) -> Result<Vec<u32>, TariffError> {
        let day = self
            .months
            .get(&month)
            .ok_or(TariffError::Uncovered { month, hour: 0 })?;
        Ok((0..24).filter(|&h| day[h as usize].tier != Tier::OffPeak).collect())
    }

    /// Off-peak hours of the month, chronological.
    pub fn off_peak_hours(&self, month: u32) -> Result<Vec<u32>, TariffError> {
        let day = self
            .months
            .get(&month)
            .ok_or(TariffError::Uncovered { month, hour: 0 })?;
        Ok((0..24).filter(|&h| day[h as usize].tier == Tier::OffPeak).collect())
    }

    /// Override if configured, otherwise [`derive_hour_sequence`].
    pub fn hour_sequence(&self, month: u32) -> Result<HourSequence, TariffError> {
        match &self.sequence_override {
            Some(seq) => HourSequence::new(seq.clone()),
            None => derive_hour_sequence(self, month),
        }
    }

    pub fn to_tariff_file(&self) -> TariffFile {
        // regroup consecutive months with identical profiles
        let mut profiles: Vec<TariffProfile> = Vec::new();
        let mut prev: Option<(u32, &[TierRate; 24])> = None;
        for (&m, day) in &self.months {
            match prev {
                Some((pm, pday)) if pm + 1 == m && pday == day => {
                    profiles.last_mut().unwrap().month_range[1] = m;
                }
                _ => {
                    let mut groups: BTreeMap<(Tier, u64), Vec<u32>> = BTreeMap::new();
                    for (h, s) in day.iter().enumerate() {
                        groups.entry((s.tier, s.rate.to_bits())).or_default().push(h as u32);
                    }
                    profiles.push(TariffProfile {
                        month_range: [m, m],
                        note: None,
                        periods: groups
                            .into_iter()
                            .map(|((tier, bits), hours)| TariffPeriod {
                                hours,
                                tier,
                                rate: f64::from_bits(bits),
                            })
                            .collect(),
                    });
                }
            }
            prev = Some((m, day));
        }
        TariffFile {
            name: self.name.clone(),
            profiles,
            hour_sequence_override: self.sequence_override.clone(),
        }
    }
}

fn check_tier_rates(day: &[TierRate; 24], month: u32) -> Result<(), TariffError> {
    let mut by_tier: BTreeMap<Tier, f64> = BTreeMap::new();
    for s in day {
        match by_tier.get(&s.tier) {
            Some(&r) if r != s.rate => {
                return Err(TariffError::Config(format!(
                    "month {month}: tier {} has two rates ({r} and {})",
                    s.tier, s.rate
                )))
            }
            _ => {
                by_tier.insert(s.tier, s.rate);
            }
        }
    }
    // compare each present tier with the next present one up
    let present: Vec<(Tier, f64)> = [Tier::OffPeak, Tier::PartialPeak, Tier::Peak, Tier::SuperPeak]
        .into_iter()
        .filter_map(|t| by_tier.get(&t).map(|r| (t, *r)))
        .collect();
    for pair in present.windows(2) {
        let ((lo, a), (hi, b)) = (pair[0], pair[1]);
        let strict = hi != Tier::SuperPeak;
        if (strict && a >= b) || (!strict && a > b) {
            return Err(TariffError::Config(format!(
                "month {month}: {lo} rate {a} not below {hi} rate {b}"
            )));
        }
    }
    Ok(())
}

/// Derives the order in which stored ice is offered to the daytime hours.
///
/// Super-peak hours come first, then peak hours, each chronologically. The
/// partial-peak hours follow, grouped into contiguous periods. Periods that
/// precede a later peak or super-peak hour come first, latest period first;
/// periods after the final peak come last. Inside a period the hours run in
/// reverse chronological order, which keeps ice in reserve for later hours.
pub fn derive_hour_sequence(tariff: &TariffSchedule, month: u32) -> Result<HourSequence, TariffError> {
    let tiers: Vec<Tier> = (0..24).map(|h| tariff.tier_at(month, h)).collect::<Result<_, _>>()?;
    let mut seq: Vec<u32> = Vec::with_capacity(24);
    for tier in [Tier::SuperPeak, Tier::Peak] {
        seq.extend((0..24u32).filter(|&h| tiers[h as usize] == tier));
    }
    let last_peak = (0..24u32)
        .rev()
        .find(|&h| matches!(tiers[h as usize], Tier::SuperPeak | Tier::Peak));

    let mut periods: Vec<Vec<u32>> = Vec::new();
    for h in 0..24u32 {
        if tiers[h as usize] != Tier::PartialPeak {
            continue;
        }
        match periods.last_mut() {
            Some(p) if *p.last().unwrap() + 1 == h => p.push(h),
            _ => periods.push(vec![h]),
        }
    }
    let (mut before, mut after): (Vec<_>, Vec<_>) =
        periods.into_iter().partition(|p| last_peak.is_some_and(|lp| p[0] < lp));
    before.reverse();
    after.reverse();
    for p in before.into_iter().chain(after) {
        seq.extend(p.into_iter().rev());
    }
    HourSequence::new(seq)
}
