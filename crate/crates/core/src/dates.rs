//! Calendar helpers shared by every module.
//!
//! Ages and window lengths are measured in fractional calendar years: a date
//! maps to `year + day_offset / days_in_year`, so whole-year windows have an
//! exact integral length regardless of leap days.

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Datelike, NaiveDate, NaiveDateTime, NaiveTime, TimeZone, Timelike, Utc};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DateError {
    #[error("invalid date {0:?}: expected YYYY or YYYY-MM-DD")]
    BadDate(String),
    #[error("invalid window {0:?}: expected START..END with ISO dates")]
    BadWindow(String),
    #[error("empty window {start}..{end}: end must be after start")]
    EmptyWindow { start: NaiveDate, end: NaiveDate },
}

fn days_in_year(year: i32) -> f64 {
    if NaiveDate::from_ymd_opt(year, 2, 29).is_some() {
        366.0
    } else {
        365.0
    }
}

/// Fractional calendar year of midnight at the start of `date`.
pub fn fractional_year(date: NaiveDate) -> f64 {
    let year = date.year();
    f64::from(year) + f64::from(date.ordinal0()) / days_in_year(year)
}

/// Fractional calendar year of an instant, at second resolution.
pub fn fractional_year_at(ts: DateTime<Utc>) -> f64 {
    let date = ts.date_naive();
    let secs = f64::from(ts.num_seconds_from_midnight());
    fractional_year(date) + secs / 86_400.0 / days_in_year(date.year())
}

/// Inverse of [`fractional_year_at`], truncated to whole seconds.
pub fn instant_from_fractional_year(value: f64) -> DateTime<Utc> {
    let year = value.floor() as i32;
    let seconds_in_year = days_in_year(year) * 86_400.0;
    let offset = ((value - f64::from(year)) * seconds_in_year).floor() as i64;
    let start = NaiveDate::from_ymd_opt(year, 1, 1)
        .expect("year in chrono range")
        .and_time(NaiveTime::MIN);
    Utc.from_utc_datetime(&(start + chrono::Duration::seconds(offset)))
}

/// Date containing the given fractional year.
pub fn date_from_fractional_year(value: f64) -> NaiveDate {
    instant_from_fractional_year(value).date_naive()
}

/// Parse `YYYY` (resolved to July 1) or `YYYY-MM-DD`.
pub fn parse_pub_date(text: &str) -> Result<NaiveDate, DateError> {
    let text = text.trim();
    if text.len() == 4 && text.bytes().all(|b| b.is_ascii_digit()) {
        let year: i32 = text.parse().map_err(|_| DateError::BadDate(text.to_string()))?;
        return NaiveDate::from_ymd_opt(year, 7, 1).ok_or_else(|| DateError::BadDate(text.to_string()));
    }
    NaiveDate::parse_from_str(text, "%Y-%m-%d").map_err(|_| DateError::BadDate(text.to_string()))
}

/// Half-open date range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DateWindow {
    start: NaiveDate,
    end: NaiveDate,
}

impl DateWindow {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<Self, DateError> {
        if end <= start {
            return Err(DateError::EmptyWindow { start, end });
        }
        Ok(Self { start, end })
    }

    /// Whole calendar years `[first, last]`, i.e. Jan 1 of `first` up to Jan 1 of `last + 1`.
    pub fn calendar_years(first: i32, last: i32) -> Result<Self, DateError> {
        let start = NaiveDate::from_ymd_opt(first, 1, 1).ok_or_else(|| DateError::BadDate(first.to_string()))?;
        let end =
            NaiveDate::from_ymd_opt(last + 1, 1, 1).ok_or_else(|| DateError::BadDate(last.to_string()))?;
        Self::new(start, end)
    }

    pub fn start(&self) -> NaiveDate {
        self.start
    }

    pub fn end(&self) -> NaiveDate {
        self.end
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.start <= date && date < self.end
    }

    pub fn contains_instant(&self, ts: DateTime<Utc>) -> bool {
        self.contains(ts.date_naive())
    }

    /// Length in fractional calendar years.
    pub fn years(&self) -> f64 {
        fractional_year(self.end) - fractional_year(self.start)
    }

    pub fn start_year(&self) -> f64 {
        fractional_year(self.start)
    }

    pub fn end_year(&self) -> f64 {
        fractional_year(self.end)
    }

    pub fn midpoint_year(&self) -> f64 {
        0.5 * (self.start_year() + self.end_year())
    }

    pub fn start_instant(&self) -> DateTime<Utc> {
        Utc.from_utc_datetime(&NaiveDateTime::new(self.start, NaiveTime::MIN))
    }

    pub fn end_instant(&self) -> DateTime<Utc> {
        Utc.from_utc_datetime(&NaiveDateTime::new(self.end, NaiveTime::MIN))
    }
}

impl fmt::Display for DateWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

impl FromStr for DateWindow {
    type Err = DateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s.split_once("..").ok_or_else(|| DateError::BadWindow(s.to_string()))?;
        let parse = |t: &str| {
            NaiveDate::parse_from_str(t.trim(), "%Y-%m-%d").map_err(|_| DateError::BadWindow(s.to_string()))
        };
        Self::new(parse(a)?, parse(b)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    #[test]
    fn whole_year_windows_have_integral_length() {
        let w = DateWindow::new(d(2000, 1, 1), d(2002, 1, 1)).unwrap();
        assert_eq!(w.years(), 2.0);
        let w = DateWindow::calendar_years(1999, 2002).unwrap();
        assert_eq!(w.years(), 4.0);
    }

    #[test]
    fn year_only_dates_resolve_to_midyear() {
        assert_eq!(parse_pub_date("1990").unwrap(), d(1990, 7, 1));
        assert_eq!(parse_pub_date("1990-03-04").unwrap(), d(1990, 3, 4));
        assert!(parse_pub_date("19x0").is_err());
        assert!(parse_pub_date("1990-13-01").is_err());
    }

    #[test]
    fn window_parse_and_reject_empty() {
        let w: DateWindow = "2001-01-01..2001-08-20".parse().unwrap();
        assert_eq!(w.start(), d(2001, 1, 1));
        assert!(w.contains(d(2001, 8, 19)));
        assert!(!w.contains(d(2001, 8, 20)));
        assert!("2001-01-01..2001-01-01".parse::<DateWindow>().is_err());
        assert!("2001-01-01".parse::<DateWindow>().is_err());
    }

    #[test]
    fn fractional_instant_round_trip() {
        let ts = Utc.with_ymd_and_hms(2001, 5, 17, 13, 45, 10).unwrap();
        let back = instant_from_fractional_year(fractional_year_at(ts) + 1e-9);
        assert_eq!(back, ts);
    }
}
