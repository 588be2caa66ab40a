//! Weighted log-space least-squares fit of the H, I and C modes.
//!
//! The objective is `Σ w_i (ln(m(t_i) + ε) − ln(d_i + ε))²` with weights equal
//! to the article count behind each bin. `k_H` is pinned to zero and the N mode
//! is held at its configured values (it still enters `m`).
//!
//! Stage one scans a log-spaced grid of `(k_I, k_C)` pairs with `k_C > k_I`,
//! solving the three amplitudes at each pair by non-negative least squares on
//! relative residuals. Stage two polishes the best grid point with a simplex
//! search over the logarithms of the five free parameters.

use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use super::{BinnedReadCurve, ModeParams, ObsolescenceModel};
use crate::config::{ConfigError, KeyValues};
use crate::simplex::{self, SimplexOptions};

/// Minimum number of bins and minimum age span (years) a curve must offer.
pub const MIN_POINTS: usize = 20;
pub const MIN_SPAN_YEARS: f64 = 30.0;
const RESTARTS: usize = 3;
const LOG_BOUND: f64 = 60.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("curve has {0} points; at least {MIN_POINTS} are required")]
    TooFewPoints(usize),
    #[error("curve spans {0} years of age; at least {MIN_SPAN_YEARS} are required")]
    ShortSpan(f64),
    #[error("degenerate curve: {0}")]
    Degenerate(&'static str),
    #[error("invalid fit configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub ki_min: f64,
    pub ki_max: f64,
    pub ki_steps: usize,
    pub kc_min: f64,
    pub kc_max: f64,
    pub kc_steps: usize,
    /// Simplex spread in log-parameter space at which the fit stops.
    pub tolerance: f64,
    pub max_evaluations: usize,
    pub epsilon: f64,
    /// The fixed N mode.
    pub new_mode: ModeParams,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            ki_min: 0.005,
            ki_max: 0.5,
            ki_steps: 40,
            kc_min: 0.05,
            kc_max: 5.0,
            kc_steps: 40,
            tolerance: 1e-8,
            max_evaluations: 10_000,
            epsilon: 1e-9,
            new_mode: ModeParams::new(1600.0, 16.0),
        }
    }
}

pub const FIT_CONFIG_KEYS: [&str; 11] = [
    "grid_ki_min",
    "grid_ki_max",
    "grid_ki_steps",
    "grid_kc_min",
    "grid_kc_max",
    "grid_kc_steps",
    "tolerance",
    "max_evaluations",
    "epsilon",
    "N0",
    "kN",
];

impl FitConfig {
    pub fn from_key_values(kv: &KeyValues) -> Result<Self, ConfigError> {
        let mut c = Self::default();
        kv.update("grid_ki_min", &mut c.ki_min)?;
        kv.update("grid_ki_max", &mut c.ki_max)?;
        kv.update("grid_ki_steps", &mut c.ki_steps)?;
        kv.update("grid_kc_min", &mut c.kc_min)?;
        kv.update("grid_kc_max", &mut c.kc_max)?;
        kv.update("grid_kc_steps", &mut c.kc_steps)?;
        kv.update("tolerance", &mut c.tolerance)?;
        kv.update("max_evaluations", &mut c.max_evaluations)?;
        kv.update("epsilon", &mut c.epsilon)?;
        kv.update("N0", &mut c.new_mode.amplitude)?;
        kv.update("kN", &mut c.new_mode.decay)?;
        c.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(c)
    }

    pub fn to_key_values(&self) -> KeyValues {
        let mut kv = KeyValues::default();
        kv.insert("grid_ki_min", self.ki_min);
        kv.insert("grid_ki_max", self.ki_max);
        kv.insert("grid_ki_steps", self.ki_steps);
        kv.insert("grid_kc_min", self.kc_min);
        kv.insert("grid_kc_max", self.kc_max);
        kv.insert("grid_kc_steps", self.kc_steps);
        kv.insert("tolerance", self.tolerance);
        kv.insert("max_evaluations", self.max_evaluations);
        kv.insert("epsilon", self.epsilon);
        kv.insert("N0", self.new_mode.amplitude);
        kv.insert("kN", self.new_mode.decay);
        kv
    }

    pub fn validate(&self) -> Result<(), FitError> {
        let positive = [self.ki_min, self.ki_max, self.kc_min, self.kc_max, self.tolerance, self.epsilon];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(FitError::Config("grid bounds, tolerance and epsilon must be positive".into()));
        }
        if self.ki_min > self.ki_max || self.kc_min > self.kc_max {
            return Err(FitError::Config("grid minimum exceeds maximum".into()));
        }
        if self.ki_steps == 0 || self.kc_steps == 0 || self.max_evaluations == 0 {
            return Err(FitError::Config("step counts and max_evaluations must be at least 1".into()));
        }
        let n = self.new_mode;
        if !(n.amplitude.is_finite() && n.amplitude >= 0.0 && n.decay.is_finite() && n.decay >= 0.0) {
            return Err(FitError::Config("N mode parameters must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub model: ObsolescenceModel,
    /// Weighted RMS of the log residuals.
    pub residual_norm: f64,
    /// Objective evaluations spent, grid included.
    pub iterations: usize,
    pub converged: bool,
}

pub const FIT_HEADER: &str = "H0\tkH\tI0\tkI\tC0\tkC\tN0\tkN\tresidual_norm\titerations\tconverged";

impl FitResult {
    /// Header line plus one data row.
    pub fn to_tsv(&self) -> String {
        format!("{FIT_HEADER}\n{self}\n")
    }
}

impl fmt::Display for FitResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in self.model.params() {
            write!(f, "{v}\t")?;
        }
        write!(f, "{}\t{}\t{}", self.residual_norm, self.iterations, self.converged)
    }
}

struct Problem<'a> {
    ages: Vec<f64>,
    log_data: Vec<f64>,
    data: Vec<f64>,
    weights: Vec<f64>,
    new_rates: Vec<f64>,
    config: &'a FitConfig,
}

impl Problem<'_> {
    fn model_at(&self, i: usize, p: &[f64; 5]) -> f64 {
        let t = self.ages[i];
        p[0] + p[1] * (-p[2] * t).exp() + p[3] * (-p[4] * t).exp() + self.new_rates[i]
    }

    fn objective(&self, p: &[f64; 5]) -> f64 {
        let eps = self.config.epsilon;
        (0..self.ages.len())
            .map(|i| {
                let r = (self.model_at(i, p) + eps).ln() - self.log_data[i];
                self.weights[i] * r * r
            })
            .sum()
    }

    /// Non-negative amplitudes `(H0, I0, C0)` for fixed decay constants,
    /// minimizing relative residuals by enumerating active sets.
    fn amplitudes(&self, ki: f64, kc: f64) -> [f64; 3] {
        let max_d = self.data.iter().cloned().fold(0.0, f64::max);
        let n = self.ages.len();
        let mut rows: Vec<([f64; 3], f64)> = Vec::with_capacity(n);
        for i in 0..n {
            let t = self.ages[i];
            let scale = self.weights[i].sqrt() / (self.data[i] + 1e-6 * max_d + self.config.epsilon);
            rows.push((
                [scale, scale * (-ki * t).exp(), scale * (-kc * t).exp()],
                scale * (self.data[i] - self.new_rates[i]),
            ));
        }
        let sse = |a: &[f64; 3]| -> f64 {
            rows.iter()
                .map(|(b, y)| {
                    let r = b[0] * a[0] + b[1] * a[1] + b[2] * a[2] - y;
                    r * r
                })
                .sum()
        };

        let mut best = [0.0; 3];
        let mut best_sse = sse(&best);
        for mask in 1u8..8 {
            let active: Vec<usize> = (0..3).filter(|j| mask & (1 << j) != 0).collect();
            let m = active.len();
            let mut ata = vec![vec![0.0; m]; m];
            let mut aty = vec![0.0; m];
            for (b, y) in &rows {
                for (r, &jr) in active.iter().enumerate() {
                    aty[r] += b[jr] * y;
                    for (c, &jc) in active.iter().enumerate() {
                        ata[r][c] += b[jr] * b[jc];
                    }
                }
            }
            let Some(sol) = solve(ata, aty) else { continue };
            if sol.iter().any(|v| !(*v > 0.0)) {
                continue;
            }
            let mut a = [0.0; 3];
            for (&j, v) in active.iter().zip(sol) {
                a[j] = v;
            }
            let s = sse(&a);
            if s < best_sse {
                best_sse = s;
                best = a;
            }
        }
        let floor = 1e-9 * max_d;
        best.map(|v| v.max(floor))
    }
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() <= 1e-14 * scale {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

fn log_grid(min: f64, max: f64, steps: usize) -> Vec<f64> {
    if steps == 1 || min == max {
        return vec![min];
    }
    let (a, b) = (min.ln(), max.ln());
    (0..steps).map(|i| (a + (b - a) * i as f64 / (steps - 1) as f64).exp()).collect()
}

fn decode(x: &[f64]) -> [f64; 5] {
    let mut p = [0.0; 5];
    for (slot, v) in p.iter_mut().zip(x) {
        *slot = v.clamp(-LOG_BOUND, LOG_BOUND).exp();
    }
    p
}

/// Fit H0, I0, k_I, C0 and k_C to `curve`. Deterministic for a given input.
pub fn fit(curve: &BinnedReadCurve, config: &FitConfig) -> Result<FitResult, FitError> {
    config.validate()?;
    let points = curve.points();
    if points.iter().all(|p| p.rate == 0.0) {
        return Err(FitError::Degenerate("every bin is zero"));
    }
    if points.len() < MIN_POINTS {
        return Err(FitError::TooFewPoints(points.len()));
    }
    if curve.span() < MIN_SPAN_YEARS {
        return Err(FitError::ShortSpan(curve.span()));
    }
    let total_weight: f64 = points.iter().map(|p| p.articles).sum();
    if total_weight <= 0.0 {
        return Err(FitError::Degenerate("no articles behind any bin"));
    }

    let eps = config.epsilon;
    let n_mode = config.new_mode;
    let problem = Problem {
        ages: points.iter().map(|p| p.age).collect(),
        log_data: points.iter().map(|p| (p.rate + eps).ln()).collect(),
        data: points.iter().map(|p| p.rate).collect(),
        weights: points.iter().map(|p| p.articles).collect(),
        new_rates: points.iter().map(|p| n_mode.amplitude * (-n_mode.decay * p.age).exp()).collect(),
        config,
    };

    let ki_grid = log_grid(config.ki_min, config.ki_max, config.ki_steps);
    let kc_grid = log_grid(config.kc_min, config.kc_max, config.kc_steps);
    let pairs: Vec<(f64, f64)> =
        ki_grid.iter().flat_map(|&ki| kc_grid.iter().filter(move |&&kc| kc > ki).map(move |&kc| (ki, kc))).collect();
    if pairs.is_empty() {
        return Err(FitError::Config("grid holds no pair with k_C > k_I".into()));
    }
    let scored: Vec<([f64; 5], f64)> = pairs
        .par_iter()
        .map(|&(ki, kc)| {
            let [h, i, c] = problem.amplitudes(ki, kc);
            let p = [h, i, ki, c, kc];
            (p, problem.objective(&p))
        })
        .collect();
    // pairs are in lexicographic order, so strict < keeps the smallest on ties
    let mut start = scored[0];
    for s in &scored[1..] {
        if s.1 < start.1 {
            start = *s;
        }
    }
    let mut evaluations = scored.len();

    let mut x: Vec<f64> = start.0.iter().map(|v| v.ln()).collect();
    let mut value = start.1;
    let mut converged = false;
    // restart from the best vertex until a run stops improving
    for _ in 0..=RESTARTS {
        let budget = config.max_evaluations.saturating_sub(evaluations - scored.len());
        if budget == 0 {
            break;
        }
        let opts = SimplexOptions { initial_step: vec![0.1; 5], tolerance: config.tolerance, max_evaluations: budget };
        let r = simplex::minimize(&x, &opts, |y| problem.objective(&decode(y)));
        evaluations += r.evaluations;
        converged = r.converged;
        let improved = r.value < value;
        if improved {
            x = r.best;
            value = r.value;
        }
        if !converged || !improved {
            break;
        }
    }

    let p = decode(&x);
    let (interesting, current) = {
        let a = ModeParams::new(p[1], p[2]);
        let b = ModeParams::new(p[3], p[4]);
        if a.decay > b.decay {
            (b, a)
        } else {
            (a, b)
        }
    };
    let model = ObsolescenceModel::new(ModeParams::new(p[0], 0.0), interesting, current, n_mode)
        .map_err(|e| FitError::Config(e.to_string()))?;
    Ok(FitResult { model, residual_norm: (value / total_weight).sqrt(), iterations: evaluations, converged })
}
