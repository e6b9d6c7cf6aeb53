use std::collections::BTreeSet;
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use super::IngestError;

/// Official holidays, one date per line (`YYYY-MM-DD`) in the file form.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HolidaySet {
    dates: BTreeSet<NaiveDate>,
}

impl HolidaySet {
    pub fn new(dates: impl IntoIterator<Item = NaiveDate>) -> Self {
        Self {
            dates: dates.into_iter().collect(),
        }
    }

    /// Parses the line format. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self, IngestError> {
        let mut dates = BTreeSet::new();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let d = NaiveDate::parse_from_str(line, "%Y-%m-%d").map_err(|_| IngestError::BadDate(line.to_string()))?;
            dates.insert(d);
        }
        Ok(Self { dates })
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, IngestError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| IngestError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.dates.contains(&date)
    }

    pub fn iter(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        self.dates.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn to_text(&self) -> String {
        self.dates.iter().map(|d| format!("{d}\n")).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CalendarMark {
    pub date: NaiveDate,
    /// Monday..Sunday = 1..7, holiday = 8.
    pub weekday_code: u8,
}

pub fn mark_calendar(date: NaiveDate, holidays: &HolidaySet) -> CalendarMark {
    let weekday_code = if holidays.contains(date) {
        8
    } else {
        date.weekday().number_from_monday() as u8
    };
    CalendarMark { date, weekday_code }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    #[test]
    fn weekday_codes() {
        let none = HolidaySet::default();
        assert_eq!(mark_calendar(d(2021, 7, 19), &none).weekday_code, 1);
        assert_eq!(mark_calendar(d(2021, 7, 25), &none).weekday_code, 7);
        let hol = HolidaySet::new([d(2021, 7, 19), d(2021, 7, 25)]);
        assert_eq!(mark_calendar(d(2021, 7, 19), &hol).weekday_code, 8);
        assert_eq!(mark_calendar(d(2021, 7, 25), &hol).weekday_code, 8);
    }

    #[test]
    fn parse_holiday_file() {
        let set = HolidaySet::parse("# National Day\n2021-10-01\n\n2021-10-02 # Sat\n").unwrap();
        assert_eq!(set.len(), 2);
        assert!(set.contains(d(2021, 10, 2)));
        assert!(HolidaySet::parse("2021-13-01").is_err());
    }
}
