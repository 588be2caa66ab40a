//! Productivity over a research career and the read and cite totals it
//! accumulates.
//!
//! Output ramps up geometrically, doubling over the first `ramp_end` years
//! after the PhD, holds at twice the starting level until `plateau_end`, then
//! declines geometrically to 1% of the starting level at `retire_age`, after
//! which it is zero. A career's current read rate and lifetime citations are
//! the convolution of that output with the per-paper read and cite kernels.
//!
//! Two views are offered. [`CareerModel::career_trajectory`] follows one
//! career forward in time. [`CareerModel::current_status`] compares careers
//! of different lengths observed at the same moment, so output from long ago
//! is discounted by the growth of the field since then.

mod generate;

use thiserror::Error;

use crate::citemodel::CitationLinkModel;
use crate::config::{ConfigError, KeyValues};
use crate::obsolescence::{ModeSet, ObsolescenceModel};

pub use generate::{generate, GroundTruth, SynthConfig, SyntheticCorpus, GROUND_TRUTH_FILE, SYNTH_CONFIG_FILE};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AgeModelError {
    #[error("career age {0} is negative")]
    NegativeAge(f64),
    #[error("invalid age model: {0}")]
    Invalid(String),
}

/// Trapezoid step for the career convolution, in years.
pub const QUADRATURE_STEP: f64 = 0.1;
/// Output at `retire_age`, relative to the starting level.
const RETIRED_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgeProductivityModel {
    /// Papers per year at the PhD.
    pub p0: f64,
    pub ramp_end: f64,
    pub plateau_end: f64,
    pub retire_age: f64,
    /// Yearly growth of the field; older output is discounted by it.
    pub growth: f64,
    /// Floor on reads per year per lifetime citation.
    pub retired_read_rate_per_cite: f64,
}

impl Default for AgeProductivityModel {
    fn default() -> Self {
        Self {
            p0: 1.0,
            ramp_end: 7.0,
            plateau_end: 30.0,
            retire_age: 42.0,
            growth: 0.037,
            retired_read_rate_per_cite: 0.5,
        }
    }
}

pub const AGE_MODEL_KEYS: [&str; 6] = ["p0", "ramp_end", "plateau_end", "retire_age", "growth", "retired_read_rate"];

impl AgeProductivityModel {
    pub fn validate(&self) -> Result<(), AgeModelError> {
        let all = [self.p0, self.ramp_end, self.plateau_end, self.retire_age, self.growth, self.retired_read_rate_per_cite];
        if all.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(AgeModelError::Invalid("parameters must be finite and non-negative".into()));
        }
        if !(0.0 < self.ramp_end && self.ramp_end < self.plateau_end && self.plateau_end < self.retire_age) {
            return Err(AgeModelError::Invalid("need 0 < ramp_end < plateau_end < retire_age".into()));
        }
        Ok(())
    }

    pub fn from_key_values(kv: &KeyValues) -> Result<Self, ConfigError> {
        let mut m = Self::default();
        kv.update("p0", &mut m.p0)?;
        kv.update("ramp_end", &mut m.ramp_end)?;
        kv.update("plateau_end", &mut m.plateau_end)?;
        kv.update("retire_age", &mut m.retire_age)?;
        kv.update("growth", &mut m.growth)?;
        kv.update("retired_read_rate", &mut m.retired_read_rate_per_cite)?;
        m.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(m)
    }

    pub fn write_key_values(&self, kv: &mut KeyValues) {
        kv.insert("p0", self.p0);
        kv.insert("ramp_end", self.ramp_end);
        kv.insert("plateau_end", self.plateau_end);
        kv.insert("retire_age", self.retire_age);
        kv.insert("growth", self.growth);
        kv.insert("retired_read_rate", self.retired_read_rate_per_cite);
    }

    /// Output of a latent-1 career at age `a`, before any stop.
    fn base(&self, a: f64) -> f64 {
        if a <= self.ramp_end {
            self.p0 * (a / self.ramp_end).exp2()
        } else if a <= self.plateau_end {
            2.0 * self.p0
        } else if a <= self.retire_age {
            let x = (a - self.plateau_end) / (self.retire_age - self.plateau_end);
            2.0 * self.p0 * (RETIRED_FRACTION / 2.0).powf(x)
        } else {
            0.0
        }
    }

    /// Papers per year at career age `a` along `path`.
    pub fn latent_productivity(&self, path: &CareerPath, a: f64) -> Result<f64, AgeModelError> {
        if a < 0.0 {
            return Err(AgeModelError::NegativeAge(a));
        }
        Ok(self.output(path, a))
    }

    pub(crate) fn output(&self, path: &CareerPath, a: f64) -> f64 {
        if a > path.stop_age {
            0.0
        } else {
            path.latent * self.base(a)
        }
    }

    /// Output at age `s` seen from age `now`, discounted for the smaller
    /// field of `now - s` years ago.
    pub fn historical_output(&self, path: &CareerPath, s: f64, now: f64) -> f64 {
        self.output(path, s) * (-self.growth * (now - s)).exp()
    }
}

/// One career: a latent multiplier and the age at which research stops.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CareerPath {
    pub latent: f64,
    pub stop_age: f64,
}

impl CareerPath {
    pub fn full(latent: f64) -> Self {
        Self { latent, stop_age: f64::INFINITY }
    }

    pub fn stopping(latent: f64, stop_age: f64) -> Self {
        Self { latent, stop_age }
    }

    pub fn validate(&self) -> Result<(), AgeModelError> {
        if !(self.latent.is_finite() && self.latent > 0.0 && self.stop_age > 0.0) {
            return Err(AgeModelError::Invalid(format!("career path {self:?} needs latent > 0 and stop_age > 0")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trajectory {
    pub age: f64,
    /// Expected reads per year at `age`.
    pub read_rate: f64,
    /// Expected citations accumulated by `age`.
    pub cites: f64,
}

/// Which expectation a score is compared with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Expectation {
    Cites,
    Reads,
    /// `(f · reads + cites) / 2` with the given `f`.
    SumProd(f64),
}

/// The productivity model together with the per-paper kernels.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CareerModel {
    pub productivity: AgeProductivityModel,
    pub reads: ObsolescenceModel,
    pub link: CitationLinkModel,
}

impl CareerModel {
    pub fn from_key_values(kv: &KeyValues) -> Result<Self, ConfigError> {
        Ok(Self {
            productivity: AgeProductivityModel::from_key_values(kv)?,
            reads: ObsolescenceModel::from_key_values(kv)?,
            link: CitationLinkModel::from_key_values(kv)?,
        })
    }

    /// Expected read rate and lifetime cites of one career at age `age`.
    ///
    /// The outer integral over the career uses the trapezoid rule with steps
    /// of at most [`QUADRATURE_STEP`]; the per-paper citation total is exact.
    pub fn career_trajectory(&self, path: &CareerPath, age: f64) -> Result<Trajectory, AgeModelError> {
        self.trajectory(path, age, false)
    }

    /// Like [`career_trajectory`](Self::career_trajectory) for a career
    /// observed now at age `age`, with output from `τ` years ago discounted by
    /// `e^{-g τ}`.
    pub fn current_status(&self, path: &CareerPath, age: f64) -> Result<Trajectory, AgeModelError> {
        self.trajectory(path, age, true)
    }

    fn trajectory(&self, path: &CareerPath, age: f64, discount: bool) -> Result<Trajectory, AgeModelError> {
        if age < 0.0 {
            return Err(AgeModelError::NegativeAge(age));
        }
        let (reads, cites) = self.convolve(path, age, discount);
        let floor = self.productivity.retired_read_rate_per_cite * cites;
        Ok(Trajectory { age, read_rate: reads.max(floor), cites })
    }

    fn convolve(&self, path: &CareerPath, age: f64, discount: bool) -> (f64, f64) {
        let (mut reads, mut cites) = (0.0, 0.0);
        let nodes = self.nodes(path, age);
        for (j, &s) in nodes.iter().enumerate() {
            let left = if j > 0 { s - nodes[j - 1] } else { 0.0 };
            let right = nodes.get(j + 1).map_or(0.0, |&n| n - s);
            let w = 0.5 * (left + right);
            let out = if discount {
                self.productivity.historical_output(path, s, age)
            } else {
                self.productivity.output(path, s)
            };
            if w == 0.0 || out == 0.0 {
                continue;
            }
            let tau = age - s;
            reads += w * out * self.reads.rate(tau, ModeSet::ARCHIVAL);
            cites += w * out * self.link.cumulative_cites(&self.reads, tau);
        }
        (reads, cites)
    }

    /// Quadrature nodes over the working part of a career up to `age`: a fixed
    /// grid anchored at 0 plus the productivity breakpoints, so that nodes do
    /// not move as `age` grows and the jump at the stop age falls on a node.
    fn nodes(&self, path: &CareerPath, age: f64) -> Vec<f64> {
        let p = &self.productivity;
        let end = age.min(path.stop_age).min(p.retire_age);
        if end <= 0.0 {
            return Vec::new();
        }
        let mut nodes: Vec<f64> = (0..).map(|i| i as f64 * QUADRATURE_STEP).take_while(|&s| s < end).collect();
        nodes.extend([p.ramp_end, p.plateau_end].into_iter().filter(|&b| b < end));
        nodes.push(end);
        nodes.sort_by(f64::total_cmp);
        nodes.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        nodes
    }

    /// The model value a score of kind `which` is divided by.
    /// Uses the current-status view, since scores are compared across
    /// authors observed at the same time.
    pub fn expectation(&self, which: Expectation, age: f64) -> Result<f64, AgeModelError> {
        let t = self.current_status(&CareerPath::full(1.0), age)?;
        Ok(match which {
            Expectation::Cites => t.cites,
            Expectation::Reads => t.read_rate,
            Expectation::SumProd(f) => (f * t.read_rate + t.cites) / 2.0,
        })
    }

    /// Single-career trajectories for latent levels 1, √10 and 10, each as a full career
    /// and as one stopping at 10 years.
    pub fn model_curves(&self, ages: &[f64]) -> Result<Vec<CareerCurve>, AgeModelError> {
        let mut out = Vec::new();
        for latent in [1.0, 10f64.sqrt(), 10.0] {
            for path in [CareerPath::full(latent), CareerPath::stopping(latent, 10.0)] {
                let points = ages.iter().map(|&a| self.career_trajectory(&path, a)).collect::<Result<_, _>>()?;
                out.push(CareerCurve { path, points });
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CareerCurve {
    pub path: CareerPath,
    pub points: Vec<Trajectory>,
}

/// Plot data for a family of curves.
pub fn curves_tsv(curves: &[CareerCurve]) -> String {
    let mut out = String::from("latent\tstop_age\tage\tread_rate\tcites\n");
    for c in curves {
        for p in &c.points {
            out.push_str(&format!("{}\t{}\t{}\t{}\t{}\n", c.path.latent, c.path.stop_age, p.age, p.read_rate, p.cites));
        }
    }
    out
}
