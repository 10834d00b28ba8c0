use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate, Weekday};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// ISO-8601 week (Monday start). Orders chronologically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IsoWeek {
    year: i32,
    week: u32,
}

impl IsoWeek {
    pub fn new(year: i32, week: u32) -> Option<Self> {
        NaiveDate::from_isoywd_opt(year, week, Weekday::Mon).map(|_| Self { year, week })
    }

    pub fn from_date(date: NaiveDate) -> Self {
        let iw = date.iso_week();
        Self {
            year: iw.year(),
            week: iw.week(),
        }
    }

    pub fn year(self) -> i32 {
        self.year
    }

    pub fn week(self) -> u32 {
        self.week
    }

    pub fn monday(self) -> NaiveDate {
        NaiveDate::from_isoywd_opt(self.year, self.week, Weekday::Mon).expect("validated week")
    }

    pub fn succ(self) -> Self {
        Self::from_date(self.monday() + chrono::Duration::weeks(1))
    }

    /// Whole weeks from `self` to `other` (negative if `other` is earlier).
    pub fn weeks_until(self, other: IsoWeek) -> i64 {
        (other.monday() - self.monday()).num_days() / 7
    }

    /// Contiguous run of weeks from `first` to `last` inclusive.
    pub fn range_inclusive(first: IsoWeek, last: IsoWeek) -> Vec<IsoWeek> {
        let mut out = Vec::new();
        let mut w = first;
        while w <= last {
            out.push(w);
            w = w.succ();
        }
        out
    }
}

impl fmt::Display for IsoWeek {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-W{:02}", self.year, self.week)
    }
}

impl FromStr for IsoWeek {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || Error::Parse(format!("bad ISO week {s:?}, expected like 2021-W07"));
        let (y, w) = s.trim().split_once("-W").ok_or_else(bad)?;
        let year = y.parse().map_err(|_| bad())?;
        let week = w.parse().map_err(|_| bad())?;
        IsoWeek::new(year, week).ok_or_else(bad)
    }
}

impl Serialize for IsoWeek {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for IsoWeek {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    #[test]
    fn sunday_and_monday_split() {
        // 2021-03-07 is a Sunday, 2021-03-08 the following Monday
        let sun = IsoWeek::from_date(d(2021, 3, 7));
        let mon = IsoWeek::from_date(d(2021, 3, 8));
        assert_eq!(sun.to_string(), "2021-W09");
        assert_eq!(mon.to_string(), "2021-W10");
    }

    #[test]
    fn year_boundary_follows_iso() {
        // 2021-01-03 (Sunday) still belongs to 2020-W53
        assert_eq!(IsoWeek::from_date(d(2021, 1, 3)).to_string(), "2020-W53");
        // 2024-12-30 (Monday) starts 2025-W01
        assert_eq!(IsoWeek::from_date(d(2024, 12, 30)).to_string(), "2025-W01");
        let w = IsoWeek::new(2020, 53).unwrap();
        assert_eq!(w.succ().to_string(), "2021-W01");
        assert!(IsoWeek::new(2021, 53).is_none());
    }

    #[test]
    fn parse_display_round_trip() {
        let w: IsoWeek = "2021-W07".parse().unwrap();
        assert_eq!(w.to_string(), "2021-W07");
        assert!("2021-07".parse::<IsoWeek>().is_err());
        let a: IsoWeek = "2021-W50".parse().unwrap();
        let b: IsoWeek = "2022-W03".parse().unwrap();
        assert_eq!(a.weeks_until(b), 5);
        assert_eq!(IsoWeek::range_inclusive(a, b).len(), 6);
    }
}
