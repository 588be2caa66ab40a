//! Citation rates implied by the readership model.
//!
//! A paper of age `T` is cited at `c · R(T) · (1 − e^{−k_D T})` per year: a
//! constant fraction `c` of its reads, ramped up while citing papers work
//! through the publication pipeline. The restricted form keeps only the
//! C and I modes, since historical browsing and new-issue scanning do not
//! turn into citations.

use std::fmt::Write as _;

use thiserror::Error;

use crate::config::{ConfigError, KeyValues};
use crate::obsolescence::{Mode, ModeSet, ObsolescenceModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CiteError {
    #[error("age {0} is negative")]
    NegativeAge(f64),
    #[error("age must be positive, got {0}")]
    NonPositiveAge(f64),
    #[error("{name} must be finite and positive, got {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("normalization needs at least 5 yearly values, horizon is {0}")]
    HorizonTooShort(usize),
    #[error("mean of the first five yearly values is zero")]
    ZeroNormalization,
    #[error("growth rate {0} is negative")]
    NegativeGrowth(f64),
    #[error("model predicts no citations at age {0}")]
    NoCitations(f64),
}

/// Citations per read and the citation ramp-up constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CitationLinkModel {
    cites_per_read: f64,
    ramp: f64,
}

impl Default for CitationLinkModel {
    fn default() -> Self {
        Self { cites_per_read: 0.05, ramp: 0.7 }
    }
}

impl CitationLinkModel {
    pub fn new(cites_per_read: f64, ramp: f64) -> Result<Self, CiteError> {
        for (name, value) in [("citations per read", cites_per_read), ("ramp constant", ramp)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(CiteError::InvalidParameter { name, value });
            }
        }
        Ok(Self { cites_per_read, ramp })
    }

    /// Defaults overridden by the keys `c` and `kD`.
    pub fn from_key_values(kv: &KeyValues) -> Result<Self, ConfigError> {
        let mut d = Self::default();
        kv.update("c", &mut d.cites_per_read)?;
        kv.update("kD", &mut d.ramp)?;
        Self::new(d.cites_per_read, d.ramp).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn cites_per_read(&self) -> f64 {
        self.cites_per_read
    }

    pub fn ramp(&self) -> f64 {
        self.ramp
    }

    fn ramp_factor(&self, t: f64) -> f64 {
        -(-self.ramp * t).exp_m1()
    }

    /// Cites per article per year at age `t`.
    pub fn cites_synchronous(&self, reads: &ObsolescenceModel, t: f64, restricted: bool) -> Result<f64, CiteError> {
        if t < 0.0 {
            return Err(CiteError::NegativeAge(t));
        }
        Ok(self.rate(reads, t, restricted))
    }

    pub(crate) fn rate(&self, reads: &ObsolescenceModel, t: f64, restricted: bool) -> f64 {
        let modes = if restricted { ModeSet::CITED } else { ModeSet::ALL };
        self.cites_per_read * reads.rate(t, modes) * self.ramp_factor(t)
    }

    /// Expected citations accumulated by one article between publication and
    /// age `t`, under the restricted rate. Closed form of the integral.
    pub fn cumulative_cites(&self, reads: &ObsolescenceModel, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let kd = self.ramp;
        let mut total = 0.0;
        for mode in [Mode::Interesting, Mode::Current] {
            let p = reads.component(mode);
            total += p.amplitude * (saturating(p.decay, t) - saturating(p.decay + kd, t));
        }
        self.cites_per_read * total
    }

    /// Expected citations between ages `a` and `b`.
    pub fn cites_between(&self, reads: &ObsolescenceModel, a: f64, b: f64) -> f64 {
        self.cumulative_cites(reads, b) - self.cumulative_cites(reads, a.max(0.0))
    }

    /// Citation history of one cohort under literature growth `g`, sampled at
    /// ages 0.5, 1.5, … for `horizon_years` values. With `normalize_first5`
    /// the series is divided by the mean of its first five values.
    pub fn cites_diachronous_curve(
        &self,
        reads: &ObsolescenceModel,
        pub_year: i32,
        horizon_years: usize,
        growth: f64,
        normalize_first5: bool,
    ) -> Result<Vec<DiachronousPoint>, CiteError> {
        if growth < 0.0 {
            return Err(CiteError::NegativeGrowth(growth));
        }
        if normalize_first5 && horizon_years < 5 {
            return Err(CiteError::HorizonTooShort(horizon_years));
        }
        let mut points: Vec<DiachronousPoint> = (0..horizon_years)
            .map(|i| {
                let age = i as f64 + 0.5;
                DiachronousPoint {
                    age,
                    year: pub_year + i as i32,
                    value: self.rate(reads, age, true) * (growth * age).exp(),
                }
            })
            .collect();
        if normalize_first5 {
            let mean = points[..5].iter().map(|p| p.value).sum::<f64>() / 5.0;
            if mean == 0.0 {
                return Err(CiteError::ZeroNormalization);
            }
            points.iter_mut().for_each(|p| p.value /= mean);
        }
        Ok(points)
    }

    /// Reads per cite at age `t`, all modes on both sides.
    pub fn implied_read_cite_ratio(&self, reads: &ObsolescenceModel, t: f64) -> Result<f64, CiteError> {
        if !(t > 0.0) {
            return Err(CiteError::NonPositiveAge(t));
        }
        let cites = self.rate(reads, t, false);
        if cites == 0.0 {
            return Err(CiteError::NoCitations(t));
        }
        Ok(reads.rate(t, ModeSet::ALL) / cites)
    }
}

/// `(1 − e^{−k t}) / k`, tending to `t` as `k → 0`.
fn saturating(k: f64, t: f64) -> f64 {
    if k == 0.0 {
        t
    } else {
        -(-k * t).exp_m1() / k
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiachronousPoint {
    pub age: f64,
    /// Calendar year of the bin.
    pub year: i32,
    pub value: f64,
}

/// Two-column plot data with a header.
pub fn curve_tsv<'a>(points: impl IntoIterator<Item = &'a (f64, f64)>) -> String {
    let mut out = String::from("age_years\tvalue\n");
    for (a, v) in points {
        let _ = writeln!(out, "{a}\t{v}");
    }
    out
}
