use std::fmt::Write as _;

use thiserror::Error;

use crate::corpus::YearlyReadRate;
use crate::dates::DateWindow;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurveError {
    #[error("ages must be strictly increasing (point {index}: {age} after {previous})")]
    NotIncreasing { index: usize, age: f64, previous: f64 },
    #[error("point {index}: {what} {value} must be finite and non-negative")]
    BadValue { index: usize, what: &'static str, value: f64 },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    /// Bin midpoint age in years.
    pub age: f64,
    /// Mean reads per article per year.
    pub rate: f64,
    pub articles: f64,
}

/// Mean readership by article age, with the article count behind each bin.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BinnedReadCurve {
    points: Vec<CurvePoint>,
}

pub const CURVE_HEADER: &str = "age_years\treads_per_article_per_year\tarticles";

impl BinnedReadCurve {
    pub fn new(points: Vec<CurvePoint>) -> Result<Self, CurveError> {
        for (index, p) in points.iter().enumerate() {
            for (what, value) in [("age", p.age), ("rate", p.rate), ("article count", p.articles)] {
                if !value.is_finite() || value < 0.0 {
                    return Err(CurveError::BadValue { index, what, value });
                }
            }
            if index > 0 && p.age <= points[index - 1].age {
                return Err(CurveError::NotIncreasing { index, age: p.age, previous: points[index - 1].age });
            }
        }
        Ok(Self { points })
    }

    /// Convert a by-publication-year series into an age curve. Cohorts
    /// published in or after the first year of `window` are dropped: part of
    /// the window precedes their publication, so their rate is biased low.
    pub fn from_yearly(series: &[YearlyReadRate], window: &DateWindow) -> Result<Self, CurveError> {
        let first_year = window.start_year().floor() as i32;
        let mut points: Vec<CurvePoint> = series
            .iter()
            .filter(|y| y.pub_year < first_year && y.papers > 0)
            .map(|y| CurvePoint { age: y.mean_age, rate: y.rate, articles: y.papers as f64 })
            .collect();
        points.sort_by(|a, b| a.age.total_cmp(&b.age));
        Self::new(points)
    }

    pub fn points(&self) -> &[CurvePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Oldest minus youngest age; 0 for fewer than two points.
    pub fn span(&self) -> f64 {
        match (self.points.first(), self.points.last()) {
            (Some(a), Some(b)) => b.age - a.age,
            _ => 0.0,
        }
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from(CURVE_HEADER);
        out.push('\n');
        for p in &self.points {
            let _ = writeln!(out, "{}\t{}\t{}", p.age, p.rate, p.articles);
        }
        out
    }

    /// Parse the output of [`to_tsv`](Self::to_tsv). The header line and
    /// `#` comments are optional.
    pub fn from_tsv(text: &str) -> Result<Self, CurveError> {
        let mut points = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line == CURVE_HEADER {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(CurveError::Parse { line: i + 1, message: format!("expected 3 fields, found {}", fields.len()) });
            }
            let mut vals = [0.0; 3];
            for (slot, f) in vals.iter_mut().zip(&fields) {
                *slot = f.trim().parse().map_err(|_| CurveError::Parse { line: i + 1, message: format!("bad number {f:?}") })?;
            }
            points.push(CurvePoint { age: vals[0], rate: vals[1], articles: vals[2] });
        }
        Self::new(points)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(age: f64, rate: f64) -> CurvePoint {
        CurvePoint { age, rate, articles: 10.0 }
    }

    #[test]
    fn rejects_unordered_or_negative() {
        assert!(BinnedReadCurve::new(vec![pt(1.0, 2.0), pt(1.0, 3.0)]).is_err());
        assert!(BinnedReadCurve::new(vec![pt(1.0, -2.0)]).is_err());
        assert!(BinnedReadCurve::new(vec![pt(0.5, 2.0), pt(1.5, 0.0)]).is_ok());
    }

    #[test]
    fn tsv_round_trip() {
        let c = BinnedReadCurve::new(vec![pt(0.5, 1756.25), pt(1.5, 0.1)]).unwrap();
        assert_eq!(BinnedReadCurve::from_tsv(&c.to_tsv()).unwrap(), c);
        assert!(BinnedReadCurve::from_tsv("1\t2").is_err());
    }

    #[test]
    fn from_yearly_drops_partial_cohorts() {
        let w = DateWindow::calendar_years(2001, 2001).unwrap();
        let row = |pub_year: i32, mean_age: f64| YearlyReadRate { pub_year, papers: 3, reads: 6, rate: 2.0, mean_age };
        let c = BinnedReadCurve::from_yearly(&[row(1990, 11.0), row(2000, 1.0), row(2001, 0.0)], &w).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.points()[0].age, 1.0);
        assert_eq!(c.span(), 10.0);
    }
}
